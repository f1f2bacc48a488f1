//! Fixed regression problems shared by the estimate, oracle and maximum
//! principle sweeps.

use std::f64::consts::PI;

use crate::error::Result;
use crate::mesh::Mesh;
use crate::metric::{ChartMetric, CurvatureBounds, Warp};
use crate::solver::DirichletProblem;

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub problem: DirichletProblem,
    pub bounds: CurvatureBounds,
}

type Data = fn([f64; 2]) -> f64;

fn entry(name: &str, metric: ChartMetric, mesh: Mesh, data: Data) -> Result<CorpusEntry> {
    let bounds = metric.curvature_bounds();
    Ok(CorpusEntry {
        name: name.to_string(),
        problem: DirichletProblem::new(metric, mesh, data, false)?,
        bounds,
    })
}

/// 17×17 unit-square problems in the flat plane.
pub fn box_corpus() -> Result<Vec<CorpusEntry>> {
    let cases: [(&str, Data); 8] = [
        ("saddle", |x| 0.5 * (x[0] * x[0] - x[1] * x[1])),
        ("bump", |x| 0.3 * (PI * x[0]).sin()),
        ("product", |x| x[0] * x[1]),
        ("ripple", |x| 0.2 + 0.1 * (2.0 * PI * x[1]).cos()),
        ("exp-cos", |x| 0.5 * x[0].exp() * x[1].cos()),
        ("steep", |x| 0.5 * (x[0] + x[1]).powi(2)),
        ("kink", |x| (x[0] - 0.5).abs()),
        ("wave", |x| 0.8 * (3.0 * x[0]).sin() * (2.0 * x[1]).sin()),
    ];
    let metric = ChartMetric::euclidean(2, vec![0.0, 0.0], vec![1.0, 1.0])?;
    cases
        .iter()
        .map(|(name, f)| entry(&format!("box17-{name}"), metric.clone(), Mesh::unit_square(17), *f))
        .collect()
}

/// Flat disks and hyperbolic/spherical disks with positive data; the
/// interior estimate is evaluated at their centers. No flat disk gets affine
/// data: a plane has constant W, so the W bound is an equality there and a
/// polar grid decides its sign by truncation error alone.
pub fn disk_corpus() -> Result<Vec<CorpusEntry>> {
    let mut out = vec![];
    let flat: [(f64, Data); 3] = [
        (1.0, |x| 1.0 + 0.3 * (2.0 * x[1]).cos()),
        (2.0, |x| 0.5 + 0.25 * (2.0 * x[1]).sin()),
        (4.0, |x| 2.0 + (3.0 * x[1]).cos()),
    ];
    for (radius, f) in flat {
        let mesh = Mesh::PolarDisk { radius, nr: 17, ntheta: 16 };
        out.push(entry(&format!("flat-disk-R{radius}"), ChartMetric::flat_polar(0.0, radius)?, mesh, f)?);
    }
    let hyp: [(f64, Data); 2] = [(1.0, |x| 0.4 + 0.2 * x[1].cos()), (2.0, |x| 1.0 + 0.3 * (3.0 * x[1]).cos())];
    for (radius, f) in hyp {
        let mesh = Mesh::PolarDisk { radius, nr: 17, ntheta: 16 };
        let m = ChartMetric::hyperbolic_polar(2, -1.0, 0.0, radius)?;
        out.push(entry(&format!("hyperbolic-disk-R{radius}"), m, mesh, f)?);
    }
    let sphere = ChartMetric::rotationally_symmetric(2, Warp::Spherical { kappa: 1.0 }, 0.0, 1.2)?;
    let mesh = Mesh::PolarDisk { radius: 1.2, nr: 17, ntheta: 16 };
    out.push(entry("spherical-disk-R1.2", sphere, mesh, |x| 0.3 + 0.1 * x[1].sin())?);
    Ok(out)
}

/// Annuli with data that is not rotationally symmetric.
pub fn annulus_corpus() -> Result<Vec<CorpusEntry>> {
    let mut out = vec![];
    let flat: [(&str, Data); 3] = [
        ("tilt", |x| if x[0] > 2.0 { 0.5 + 0.3 * x[1].cos() } else { 0.0 }),
        ("twist", |x| 0.2 * (2.0 * x[1]).sin() * x[0]),
        ("log", |x| x[0].ln()),
    ];
    for (name, f) in flat {
        let mesh = Mesh::PolarAnnulus { r: [1.0, 3.0], nr: 17, ntheta: 16 };
        out.push(entry(&format!("flat-annulus-{name}"), ChartMetric::flat_polar(1.0, 3.0)?, mesh, f)?);
    }
    let hyp: [(&str, Data); 3] = [
        ("step", |x| if x[0] > 1.0 { 0.3 } else { 0.0 }),
        ("wave", |x| 0.2 * (x[1] + x[0]).cos()),
        ("bowl", |x| 0.5 * x[0] * x[0]),
    ];
    for (name, f) in hyp {
        let mesh = Mesh::PolarAnnulus { r: [0.5, 2.0], nr: 17, ntheta: 16 };
        let m = ChartMetric::hyperbolic_polar(2, -1.0, 0.5, 2.0)?;
        out.push(entry(&format!("hyperbolic-annulus-{name}"), m, mesh, f)?);
    }
    Ok(out)
}

/// Every regression problem; 22 in total.
pub fn regression_corpus() -> Result<Vec<CorpusEntry>> {
    let mut all = box_corpus()?;
    all.extend(disk_corpus()?);
    all.extend(annulus_corpus()?);
    let metric = ChartMetric::euclidean(2, vec![0.0, 0.0], vec![1.0, 1.0])?;
    let mesh = Mesh::unit_square(33);
    all.push(entry("box33-saddle", metric.clone(), mesh, |x| 0.5 * (x[0] * x[0] - x[1] * x[1]))?);
    all.push(entry("box33-bump", metric, mesh, |x| 0.3 * (PI * x[0]).sin() + 0.1)?);
    Ok(all)
}
