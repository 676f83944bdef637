import init, { model_portrait, synthesize_summary, model_time1 } from "./pkg/parabsynth_wasm.js";

const num = (id) => parseFloat(document.getElementById(id).value);

function wire(button, run, out) {
  document.getElementById(button).addEventListener("click", () => {
    const el = document.getElementById(out);
    try {
      run(el);
    } catch (e) {
      el.textContent = "error: " + e;
    }
  });
}

await init();

wire("p-run", (el) => {
  el.innerHTML = model_portrait(num("p-lambda"), num("p-mu-re"), num("p-mu-im"), num("p-grid"));
}, "portrait");

wire("s-run", (el) => {
  const force = document.getElementById("s-force").checked;
  const s = JSON.parse(synthesize_summary(num("s-c"), num("s-mu"), num("s-lambda"), force));
  el.textContent = JSON.stringify(s, null, 2);
}, "s-out");

wire("t-run", (el) => {
  const r = JSON.parse(model_time1(num("t-lambda"), num("t-mu-re"), num("t-mu-im"), num("t-re"), num("t-im")));
  el.textContent = JSON.stringify(r, null, 2);
}, "t-out");

document.getElementById("p-run").click();
