//! Phase portraits: real-time trajectories, singularity annotations, SVG and CSV output.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::flow::{self, FieldError, FlowError, FlowOptions, FlowStatus, Singularity, SingularityKind, VectorField};
use crate::globalize::{self, GlobalizeError, SpinalGraph, TraceOptions};
use crate::model::Side;
use crate::synthesis::{side_for, SectorField, SynthesisResult};
use crate::{par, C};

/// Half-width of the square viewport centered at `0`.
pub const VIEW: f64 = 2.0;
const SVG_SIZE: f64 = 800.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PortraitOptions {
    /// Real time of each half-trajectory.
    pub time: f64,
    pub flow_tol: f64,
    pub escape_radius: f64,
    /// Points kept per half-trajectory after thinning.
    pub max_points: usize,
    pub spinal: bool,
}

impl Default for PortraitOptions {
    fn default() -> Self {
        PortraitOptions {
            time: 200.0,
            flow_tol: 1e-9,
            escape_radius: 3.0 * VIEW,
            max_points: 400,
            spinal: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: usize,
    pub seed: C,
    pub forward: bool,
    /// `(real time, point)`.
    pub points: Vec<(f64, C)>,
    pub status: FlowStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    Stationary,
    Pole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub kind: AnnotationKind,
    pub at: C,
    pub order: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingularityCounts {
    /// Distinct stationary points in the viewport.
    pub stationary: usize,
    /// Stationary points counted with multiplicity.
    pub zeros_with_multiplicity: u32,
    pub poles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portrait {
    pub trajectories: Vec<Trajectory>,
    pub annotations: Vec<Annotation>,
    pub counts: SingularityCounts,
    pub spinal: Option<SpinalGraph>,
}

pub fn in_view(z: C) -> bool {
    z.re.abs() <= VIEW && z.im.abs() <= VIEW
}

/// `n × n` cell-centered grid on the viewport.
pub fn grid_seeds(n: usize) -> Vec<C> {
    let h = 2.0 * VIEW / n as f64;
    (0..n * n)
        .map(|k| C::new(-VIEW + h * ((k % n) as f64 + 0.5), -VIEW + h * ((k / n) as f64 + 0.5)))
        .collect()
}

pub fn annotations(sing: &[Singularity]) -> (Vec<Annotation>, SingularityCounts) {
    let ann: Vec<Annotation> = sing
        .iter()
        .filter_map(|s| {
            let at = s.at.filter(|z| in_view(*z))?;
            Some(match s.kind {
                SingularityKind::Zero(m) => Annotation {
                    kind: AnnotationKind::Stationary,
                    at,
                    order: m,
                },
                SingularityKind::Pole(m) => Annotation {
                    kind: AnnotationKind::Pole,
                    at,
                    order: m,
                },
            })
        })
        .collect();
    let counts = SingularityCounts {
        stationary: ann.iter().filter(|a| a.kind == AnnotationKind::Stationary).count(),
        zeros_with_multiplicity: ann
            .iter()
            .filter(|a| a.kind == AnnotationKind::Stationary)
            .map(|a| a.order)
            .sum(),
        poles: ann.iter().filter(|a| a.kind == AnnotationKind::Pole).count(),
    };
    (ann, counts)
}

fn thin(points: Vec<(C, C)>, max_points: usize) -> Vec<(f64, C)> {
    let n = points.len();
    if n <= max_points || max_points < 2 {
        return points.into_iter().map(|(t, z)| (t.re, z)).collect();
    }
    (0..max_points)
        .map(|k| {
            let (t, z) = points[k * (n - 1) / (max_points - 1)];
            (t.re, z)
        })
        .collect()
}

fn half_trajectory<X: VectorField + ?Sized>(
    x: &X,
    seed: C,
    forward: bool,
    opts: &PortraitOptions,
) -> Result<(Vec<(f64, C)>, FlowStatus), FlowError> {
    let fo = FlowOptions {
        record: true,
        escape_radius: Some(opts.escape_radius),
        ..FlowOptions::with_tol(opts.flow_tol)
    };
    let t = if forward { opts.time } else { -opts.time };
    let r = flow::flow(x, seed, C::new(t, 0.0), &fo)?;
    Ok((thin(r.trajectory, opts.max_points), r.status))
}

/// Forward and backward trajectories from every seed; seeds on a singularity are skipped.
pub fn portrait<X: VectorField + ?Sized>(x: &X, seeds: &[C], opts: &PortraitOptions) -> Result<Portrait, GlobalizeError> {
    let jobs: Vec<(usize, C, bool)> = seeds
        .iter()
        .enumerate()
        .flat_map(|(k, &z)| [(k, z, true), (k, z, false)])
        .collect();
    let results = par::map(&jobs, |&(k, z, fwd)| (k, z, fwd, half_trajectory(x, z, fwd, opts)));
    let mut trajectories = Vec::new();
    for (k, seed, forward, r) in results {
        match r {
            Ok((points, status)) => trajectories.push(Trajectory {
                id: 2 * k + usize::from(!forward),
                seed,
                forward,
                points,
                status,
            }),
            Err(FlowError::StartAtPole(_)) | Err(FlowError::Field(FieldError::Pole(_))) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let (annotations, counts) = annotations(&x.singularities());
    let spinal = if opts.spinal {
        let extra = globalize::seeds_near_zeros(x, 8);
        Some(globalize::trace_separatrices(x, &extra, &TraceOptions::default())?)
    } else {
        None
    };
    Ok(Portrait {
        trajectories,
        annotations,
        counts,
        spinal,
    })
}

/// `X_f` with the sector picked by `Re z`.
pub struct SynthField<'a> {
    plus: SectorField<'a>,
    minus: SectorField<'a>,
}

impl<'a> SynthField<'a> {
    pub fn new(r: &'a SynthesisResult) -> Self {
        SynthField {
            plus: r.sector_field(Side::Plus),
            minus: r.sector_field(Side::Minus),
        }
    }
}

impl VectorField for SynthField<'_> {
    fn eval(&self, z: C) -> Result<C, FieldError> {
        match side_for(z) {
            Side::Plus => self.plus.eval(z),
            Side::Minus => self.minus.eval(z),
        }
    }

    fn singularities(&self) -> Vec<Singularity> {
        let mut out: Vec<Singularity> = self
            .plus
            .singularities()
            .into_iter()
            .filter(|s| !matches!(s.kind, SingularityKind::Pole(_)))
            .collect();
        for (a, b) in self.plus.poles.iter().zip(&self.minus.poles) {
            let p = if side_for(*a) == Side::Plus { *a } else { *b };
            out.push(Singularity {
                at: Some(p),
                kind: SingularityKind::Pole(1),
            });
        }
        out
    }
}

fn px(z: C) -> (f64, f64) {
    let s = SVG_SIZE / (2.0 * VIEW);
    ((z.re + VIEW) * s, (VIEW - z.im) * s)
}

fn polyline(out: &mut String, pts: impl Iterator<Item = C>, style: &str) {
    let mut d = String::new();
    for z in pts.filter(|z| z.re.abs() <= 2.0 * VIEW && z.im.abs() <= 2.0 * VIEW) {
        let (x, y) = px(z);
        let _ = write!(d, "{x:.5},{y:.5} ");
    }
    if !d.is_empty() {
        let _ = writeln!(out, r#"<polyline points="{}" {style}/>"#, d.trim_end());
    }
}

/// SVG of the viewport `[−2, 2]²`; the output depends only on the portrait.
pub fn to_svg(p: &Portrait) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        SVG_SIZE
    );
    let _ = writeln!(s, r#"<clipPath id="view"><rect x="0" y="0" width="{0}" height="{0}"/></clipPath>"#, SVG_SIZE);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{0}" height="{0}" fill="white" stroke="black"/>"#, SVG_SIZE);
    let _ = writeln!(s, r#"<g clip-path="url(#view)" fill="none">"#);
    for t in &p.trajectories {
        polyline(&mut s, t.points.iter().map(|q| q.1), r##"stroke="#888888" stroke-width="0.8""##);
    }
    if let Some(g) = &p.spinal {
        for a in &g.separatrices {
            polyline(&mut s, a.polyline.iter().copied(), r##"stroke="#1f4fbf" stroke-width="1.6""##);
        }
    }
    let _ = writeln!(s, "</g>");
    for a in &p.annotations {
        let (x, y) = px(a.at);
        match a.kind {
            AnnotationKind::Stationary => {
                let _ = writeln!(
                    s,
                    r##"<circle class="stationary" cx="{x:.5}" cy="{y:.5}" r="6.00000" fill="none" stroke="#1a9a1a" stroke-width="2.5" data-order="{}"/>"##,
                    a.order
                );
            }
            AnnotationKind::Pole => {
                let _ = writeln!(
                    s,
                    r##"<rect class="pole" x="{:.5}" y="{:.5}" width="8.00000" height="8.00000" fill="#c41e1e" data-order="{}"/>"##,
                    x - 4.0,
                    y - 4.0,
                    a.order
                );
            }
        }
    }
    let _ = writeln!(s, "</svg>");
    s
}

/// Trajectory dump with columns `traj_id,t,re,im`.
pub fn to_csv(p: &Portrait) -> String {
    let mut s = String::from("traj_id,t,re,im\n");
    for t in &p.trajectories {
        for (time, z) in &t.points {
            let _ = writeln!(s, "{},{:.9e},{:.12e},{:.12e}", t.id, time, z.re, z.im);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::ModelField;
    use crate::model::ModelParams;
    use crate::re;

    #[test]
    fn model_counts() {
        let x = ModelField::new(ModelParams::new(0.5, re(0.0)).unwrap());
        let (_, c) = annotations(&x.singularities());
        assert_eq!((c.zeros_with_multiplicity, c.poles), (2, 2));
        let x = ModelField::new(ModelParams::new(0.5, re(0.5)).unwrap());
        let (_, c) = annotations(&x.singularities());
        assert_eq!((c.stationary, c.poles), (3, 4));
    }

    #[test]
    fn svg_is_deterministic() {
        let x = ModelField::new(ModelParams::new(0.5, re(0.5)).unwrap());
        let opts = PortraitOptions {
            spinal: false,
            time: 20.0,
            ..Default::default()
        };
        let a = to_svg(&portrait(&x, &grid_seeds(3), &opts).unwrap());
        let b = to_svg(&portrait(&x, &grid_seeds(3), &opts).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
    }

    #[test]
    fn csv_header_and_rows() {
        let x = ModelField::new(ModelParams::new(0.5, re(0.0)).unwrap());
        let opts = PortraitOptions {
            spinal: false,
            time: 5.0,
            ..Default::default()
        };
        let p = portrait(&x, &[C::new(0.5, 0.5)], &opts).unwrap();
        let csv = to_csv(&p);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("traj_id,t,re,im"));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 4);
        assert_eq!(first[0], "0");
        assert_eq!(p.trajectories.len(), 2);
        let fwd = &p.trajectories[0];
        assert!((fwd.points.last().unwrap().0 - 5.0).abs() < 1e-9 || fwd.status != FlowStatus::Ok);
    }
}
