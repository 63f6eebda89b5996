//! λ-sweep over both λ-line fields: the vortex boundary is the outermost
//! closed orbit that encloses exactly the two wedges of its pair.

use alloc::vec::Vec;

use super::eta::{Branch, EtaFieldSpec, TensorEtaField};
use super::integrate::LineIntegration;
use super::section::{find_closed_orbits, PoincareSection};
use crate::cauchy_green::{EigenField, SymmetricTensorField};
use crate::flowmap::{advect, FlowError, IntegratorConfig};
use crate::par;
use crate::topology::{census_enclosed, Census, ClosedPolygon, Singularity, WedgePair};
use crate::velocity::VelocityField;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_step: f64,
    pub branches: Vec<Branch>,
    pub integration: LineIntegration,
}

impl SweepConfig {
    /// λ from 0.85 to 1.15 in steps of 0.01 on both branches.
    pub fn standard(integration: LineIntegration) -> Self {
        SweepConfig { lambda_min: 0.85, lambda_max: 1.15, lambda_step: 0.01, branches: Branch::BOTH.to_vec(), integration }
    }

    /// Sweep values, computed from the step count so that the end point is
    /// hit without accumulated drift.
    pub fn lambdas(&self) -> Vec<f64> {
        lambda_values(self.lambda_min, self.lambda_max, self.lambda_step)
    }
}

pub fn lambda_values(min: f64, max: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || max < min {
        return Vec::new();
    }
    let n = libm::floor((max - min) / step + 1e-9) as usize;
    (0..=n).map(|k| min + k as f64 * step).filter(|&l| l > 0.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VortexBoundary {
    pub polygon: ClosedPolygon,
    pub lambda: f64,
    pub branch: Branch,
    pub census: Census,
    /// Section coordinate of the orbit's seed.
    pub seed_coordinate: f64,
    /// `|P(x) − x|` at the seed.
    pub closure_error: f64,
}

/// Every closed orbit of the sweep that passes the enclosure rule, the
/// outermost first. Ties in section coordinate go to the earlier λ, then
/// the `+` branch.
pub fn sweep_all(
    tf: &SymmetricTensorField,
    ef: &EigenField,
    sings: &[Singularity],
    pair: &WedgePair,
    section: &PoincareSection,
    cfg: &SweepConfig,
) -> Vec<VortexBoundary> {
    let lambdas = cfg.lambdas();
    let jobs: Vec<(usize, Branch)> =
        lambdas.iter().enumerate().flat_map(|(k, _)| cfg.branches.iter().map(move |&b| (k, b))).collect();
    let found = par::map_range(jobs.len(), |j| {
        let (k, branch) = jobs[j];
        let Some(spec) = EtaFieldSpec::new(lambdas[k], branch) else { return Vec::new() };
        let field = TensorEtaField::new(tf, ef, spec);
        find_closed_orbits(&field, section, &cfg.integration)
            .into_iter()
            .filter_map(|o| {
                let polygon = ClosedPolygon::new(o.orbit).ok()?;
                let census = census_enclosed(&polygon, sings);
                let encloses_pair = polygon.contains(sings[pair.first].position) && polygon.contains(sings[pair.second].position);
                let accepted = encloses_pair && census.wedges == 2 && census.total() == 2;
                accepted.then(|| {
                    (k, VortexBoundary {
                        polygon,
                        lambda: spec.lambda,
                        branch,
                        census,
                        seed_coordinate: o.seed_coordinate,
                        closure_error: o.return_distance.abs(),
                    })
                })
            })
            .collect::<Vec<_>>()
    });
    let mut all: Vec<(usize, VortexBoundary)> = found.into_iter().flatten().collect();
    all.sort_by(|(ka, a), (kb, b)| {
        b.seed_coordinate.total_cmp(&a.seed_coordinate).then(ka.cmp(kb)).then(a.branch.cmp(&b.branch))
    });
    all.into_iter().map(|(_, b)| b).collect()
}

/// Outermost admissible closed orbit, if any λ produces one.
pub fn sweep_lambda(
    tf: &SymmetricTensorField,
    ef: &EigenField,
    sings: &[Singularity],
    pair: &WedgePair,
    section: &PoincareSection,
    cfg: &SweepConfig,
) -> Option<VortexBoundary> {
    sweep_all(tf, ef, sings, pair, section, cfg).into_iter().next()
}

/// Ratio of advected to initial perimeter of a closed curve.
pub fn stretching_ratio<F: VelocityField + ?Sized>(
    field: &F,
    polygon: &ClosedPolygon,
    cfg: &IntegratorConfig,
) -> Result<f64, FlowError> {
    let v = polygon.vertices();
    let moved: Vec<Result<crate::geometry::Point, FlowError>> = par::map_range(v.len(), |k| advect(field, v[k], cfg));
    let moved: Vec<crate::geometry::Point> = moved.into_iter().collect::<Result<_, _>>()?;
    let n = moved.len();
    let after: f64 = (0..n).map(|k| moved[k].distance(moved[(k + 1) % n])).sum();
    Ok(after / polygon.perimeter())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cauchy_green::SymTensor;
    use crate::geometry::{Bounds, Mat2, Point};
    use crate::grid::GridSpec;
    use crate::topology::SingularityType;
    use crate::velocity::Linear;

    #[test]
    fn standard_sweep_has_31_values() {
        let l = SweepConfig::standard(LineIntegration { step: 0.01, max_arclength: 1.0 }).lambdas();
        assert_eq!(l.len(), 31);
        assert_eq!(l[0], 0.85);
        assert!((l[30] - 1.15).abs() < 1e-12);
        assert!(lambda_values(1.0, 0.5, 0.1).is_empty());
    }

    #[test]
    fn isotropic_region_has_no_boundary() {
        let grid = GridSpec::covering(Bounds::new(0.0, 1.0, 0.0, 1.0), 11, 11);
        let tf = SymmetricTensorField::from_fn(grid, |_| SymTensor::IDENTITY);
        let ef = EigenField::from_tensors(&tf);
        let s = [
            Singularity { position: Point::new(0.4, 0.5), kind: SingularityType::Wedge, nearest_neighbor_distance: 0.2, cell: (4, 5) },
            Singularity { position: Point::new(0.6, 0.5), kind: SingularityType::Wedge, nearest_neighbor_distance: 0.2, cell: (6, 5) },
        ];
        let pair = WedgePair { first: 0, second: 1, midpoint: Point::new(0.5, 0.5), separation: 0.2 };
        let section = super::super::section::build_section(pair.midpoint, 0.3, 10, Some(grid.bounds())).unwrap();
        let cfg = SweepConfig::standard(LineIntegration { step: 0.01, max_arclength: 6.0 });
        assert!(sweep_lambda(&tf, &ef, &s, &pair, &section, &cfg).is_none());
    }

    /// ξ2 tangent to circles about the origin, λ1 = 0.5, λ2 = 1.5 + r.
    fn circle_field() -> (SymmetricTensorField, EigenField) {
        let grid = GridSpec::covering(Bounds::new(-1.0, 1.0, -1.0, 1.0), 81, 81);
        let tf = SymmetricTensorField::from_fn(grid, |p| {
            let r = p.norm().max(1e-9);
            let t = p.perp() * (1.0 / r);
            let (l1, l2) = (0.5, 1.5 + r);
            SymTensor::new(l1 + (l2 - l1) * t.x * t.x, (l2 - l1) * t.x * t.y, l1 + (l2 - l1) * t.y * t.y)
        });
        let ef = EigenField::from_tensors(&tf);
        (tf, ef)
    }

    #[test]
    fn enclosure_rule_rejects_third_singularity() {
        let (tf, ef) = circle_field();
        let w = |x: f64, y: f64| Singularity { position: Point::new(x, y), kind: SingularityType::Wedge, nearest_neighbor_distance: 0.1, cell: (0, 0) };
        let pair = WedgePair { first: 0, second: 1, midpoint: Point::ZERO, separation: 0.1 };
        let section = super::super::section::build_section(Point::new(0.0, 0.0), 0.8, 9, Some(tf.grid.bounds())).unwrap();
        // λ² ≥ λ2 everywhere on the section keeps η = ξ2: circles
        let cfg = SweepConfig {
            lambda_min: 2.0,
            lambda_max: 2.0,
            lambda_step: 0.1,
            branches: alloc::vec![Branch::Plus],
            integration: LineIntegration { step: 0.005, max_arclength: 8.0 },
        };
        let two = [w(-0.03, 0.0), w(0.03, 0.0)];
        let b = sweep_lambda(&tf, &ef, &two, &pair, &section, &cfg).expect("circles enclose the pair");
        assert_eq!(b.census, Census { wedges: 2, trisectors: 0, unclassified: 0 });
        assert!((b.seed_coordinate - 0.8).abs() < 1e-12);
        // a third wedge at radius 0.45 rules out the outer circles only
        let three = [w(-0.03, 0.0), w(0.03, 0.0), w(0.0, 0.45)];
        let b = sweep_lambda(&tf, &ef, &three, &pair, &section, &cfg).unwrap();
        assert!((b.seed_coordinate - 0.4).abs() < 1e-12);
    }

    #[test]
    fn rotation_preserves_length() {
        let poly = ClosedPolygon::new((0..64).map(|k| Point::from_angle(core::f64::consts::TAU * k as f64 / 64.0)).collect()).unwrap();
        let rot = Linear(Mat2::new(0.0, -1.0, 1.0, 0.0));
        let r = stretching_ratio(&rot, &poly, &IntegratorConfig::rk45(0.0, 1.3, 1e-10)).unwrap();
        assert!((r - 1.0).abs() < 1e-8);
        let grow = Linear(Mat2::new(0.1, 0.0, 0.0, 0.1));
        let r = stretching_ratio(&grow, &poly, &IntegratorConfig::rk45(0.0, 2.0, 1e-10)).unwrap();
        assert!((r - 0.2f64.exp()).abs() < 1e-8);
    }
}
