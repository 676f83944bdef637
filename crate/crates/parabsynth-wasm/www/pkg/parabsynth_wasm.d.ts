/* tslint:disable */
/* eslint-disable */

/**
 * SVG phase portrait of the model field on `[−2, 2]²`.
 */
export function model_portrait(lambda: number, mu_re: number, mu_im: number, grid: number): string;

/**
 * Time-1 map of the model field at `z`.
 */
export function model_time1(lambda: number, mu_re: number, mu_im: number, re: number, im: number): string;

/**
 * Synthesizes from `ψ⁰(h) = h·exp(c0·h)` and returns a JSON summary.
 * `lambda ≤ 0` selects half the admissible bound.
 */
export function synthesize_summary(c0: number, mu: number, lambda: number, force: boolean): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly model_portrait: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly model_time1: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly synthesize_summary: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
