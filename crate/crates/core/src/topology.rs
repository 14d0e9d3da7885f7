//! Spatial layout of the two-tier network.
//!
//! A macro BS sits at the centre of a square grid, small cells are placed at
//! fixed offsets from it, and every small cell is ringed by evenly spaced IRS
//! panels. Eavesdroppers sit on a wider circle around each cell, outside the
//! IRS ring. UEs are dropped either uniformly or in Gaussian clusters.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Point at `radius` from `self` in direction `angle` (radians).
    pub fn polar_offset(&self, radius: f64, angle: f64) -> Position {
        Position::new(self.x + radius * angle.cos(), self.y + radius * angle.sin())
    }

    fn inside_square(&self, side: f64) -> bool {
        (0.0..=side).contains(&self.x) && (0.0..=side).contains(&self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionCase {
    /// Case 1: i.i.d. uniform UE drops over the grid.
    Random,
    /// Case 2: uniformly placed cluster centres with Gaussian members.
    Clustered,
}

impl DistributionCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            DistributionCase::Random => "random",
            DistributionCase::Clustered => "clustered",
        }
    }
}

impl std::fmt::Display for DistributionCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DistributionCase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" | "case1" | "uniform" => Ok(DistributionCase::Random),
            "clustered" | "case2" | "cluster" => Ok(DistributionCase::Clustered),
            other => Err(format!("unknown distribution case `{other}` (expected random|clustered)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyConfig {
    /// Side of the square deployment area in metres.
    pub grid_side: f64,
    /// Small-cell BS positions relative to the macro BS.
    pub small_cell_offsets: Vec<Position>,
    pub irs_per_cell: usize,
    pub irs_radius: f64,
    pub eavesdroppers_per_cell: usize,
    pub eve_radius: f64,
    pub ue_count: usize,
    pub distribution_case: DistributionCase,
    pub cluster_size: usize,
    /// Standard deviation of the per-axis Gaussian offset of cluster members.
    pub cluster_spread: f64,
    /// When set, only IRS panels whose fading-free RSSI at the UE reaches
    /// this level (dB) count as detected. Disabled by default.
    pub detection_threshold_db: Option<f64>,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            grid_side: 200.0,
            small_cell_offsets: vec![Position::new(-50.0, 0.0), Position::new(50.0, 0.0)],
            irs_per_cell: 8,
            irs_radius: 20.0,
            eavesdroppers_per_cell: 2,
            eve_radius: 25.0,
            ue_count: 20,
            distribution_case: DistributionCase::Random,
            cluster_size: 10,
            cluster_spread: 50.0,
            detection_threshold_db: None,
        }
    }
}

impl TopologyConfig {
    pub fn small_cell_count(&self) -> usize {
        self.small_cell_offsets.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid_side.is_finite() && self.grid_side > 0.0) {
            return Err(invalid("topology.grid_side", "must be a positive finite length"));
        }
        if self.small_cell_offsets.is_empty() {
            return Err(invalid("topology.small_cell_offsets", "at least one small cell is required"));
        }
        if self
            .small_cell_offsets
            .iter()
            .any(|o| !(o.x.is_finite() && o.y.is_finite()))
        {
            return Err(invalid("topology.small_cell_offsets", "offsets must be finite"));
        }
        if self.irs_per_cell < 2 {
            return Err(invalid("topology.irs_per_cell", "must be at least 2"));
        }
        if !(self.irs_radius.is_finite() && self.irs_radius > 0.0) {
            return Err(invalid("topology.irs_radius", "must be positive"));
        }
        if !(self.eve_radius.is_finite() && self.eve_radius > self.irs_radius) {
            return Err(invalid(
                "topology.eve_radius",
                format!("must exceed irs_radius ({})", self.irs_radius),
            ));
        }
        if self.ue_count == 0 {
            return Err(invalid("topology.ue_count", "must be at least 1"));
        }
        if self.distribution_case == DistributionCase::Clustered {
            if self.cluster_size == 0 {
                return Err(invalid("topology.cluster_size", "must be at least 1"));
            }
            if self.ue_count % self.cluster_size != 0 {
                return Err(invalid(
                    "topology.ue_count",
                    format!(
                        "{} UEs cannot be split into clusters of {}",
                        self.ue_count, self.cluster_size
                    ),
                ));
            }
        }
        if !(self.cluster_spread.is_finite() && self.cluster_spread >= 0.0) {
            return Err(invalid("topology.cluster_spread", "must be a non-negative standard deviation"));
        }
        if matches!(self.detection_threshold_db, Some(t) if !t.is_finite()) {
            return Err(invalid("topology.detection_threshold_db", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrsPanel {
    pub cell: usize,
    pub position: Position,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eavesdropper {
    pub cell: usize,
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub grid_side: f64,
    pub macro_bs: Position,
    pub small_cells: Vec<Position>,
    /// Panels are stored cell by cell, so panel `k` of cell `c` has index
    /// `c * irs_per_cell + k`.
    pub irs_panels: Vec<IrsPanel>,
    pub eavesdroppers: Vec<Eavesdropper>,
    pub ues: Vec<Position>,
}

/// Lays out the macro BS, small cells, IRS rings and eavesdroppers. UEs are
/// left empty; see [`place_ues`].
pub fn build_topology<R: Rng + ?Sized>(cfg: &TopologyConfig, rng: &mut R) -> Result<NetworkTopology> {
    cfg.validate()?;
    let side = cfg.grid_side;
    let macro_bs = Position::new(side / 2.0, side / 2.0);

    let mut small_cells = Vec::with_capacity(cfg.small_cell_count());
    for (cell, off) in cfg.small_cell_offsets.iter().enumerate() {
        let centre = Position::new(macro_bs.x + off.x, macro_bs.y + off.y);
        let r = cfg.irs_radius;
        let fits = centre.x - r >= 0.0 && centre.x + r <= side && centre.y - r >= 0.0 && centre.y + r <= side;
        if !fits {
            return Err(Error::CellOutsideGrid {
                cell,
                x: centre.x,
                y: centre.y,
                radius: r,
                side,
            });
        }
        small_cells.push(centre);
    }

    let step = TAU / cfg.irs_per_cell as f64;
    let irs_panels = small_cells
        .iter()
        .enumerate()
        .flat_map(|(cell, centre)| {
            (0..cfg.irs_per_cell).map(move |k| IrsPanel {
                cell,
                position: centre.polar_offset(cfg.irs_radius, step * k as f64),
            })
        })
        .collect();

    let mut eavesdroppers = Vec::with_capacity(cfg.small_cell_count() * cfg.eavesdroppers_per_cell);
    for (cell, centre) in small_cells.iter().enumerate() {
        for _ in 0..cfg.eavesdroppers_per_cell {
            let angle = rng.gen::<f64>() * TAU;
            eavesdroppers.push(Eavesdropper {
                cell,
                position: centre.polar_offset(cfg.eve_radius, angle),
            });
        }
    }

    Ok(NetworkTopology {
        grid_side: side,
        macro_bs,
        small_cells,
        irs_panels,
        eavesdroppers,
        ues: Vec::new(),
    })
}

/// Drops `cfg.ue_count` UEs according to the configured distribution case.
pub fn place_ues<R: Rng + ?Sized>(
    cfg: &TopologyConfig,
    topo: &NetworkTopology,
    rng: &mut R,
) -> Result<Vec<Position>> {
    cfg.validate()?;
    let side = topo.grid_side;
    let uniform = |rng: &mut R| Position::new(rng.gen::<f64>() * side, rng.gen::<f64>() * side);

    let ues = match cfg.distribution_case {
        DistributionCase::Random => (0..cfg.ue_count).map(|_| uniform(rng)).collect(),
        DistributionCase::Clustered => {
            let clusters = cfg.ue_count / cfg.cluster_size;
            let mut ues = Vec::with_capacity(cfg.ue_count);
            // Normal::new only fails for a non-finite std dev, which validate() rejects.
            let offset = Normal::new(0.0, cfg.cluster_spread)
                .map_err(|e| invalid("topology.cluster_spread", e.to_string()))?;
            for _ in 0..clusters {
                let centre = uniform(rng);
                for _ in 0..cfg.cluster_size {
                    let x = (centre.x + offset.sample(rng)).clamp(0.0, side);
                    let y = (centre.y + offset.sample(rng)).clamp(0.0, side);
                    ues.push(Position::new(x, y));
                }
            }
            ues
        }
    };
    Ok(ues)
}

/// Builds the layout and drops the UEs into it.
pub fn generate<R: Rng + ?Sized>(cfg: &TopologyConfig, rng: &mut R) -> Result<NetworkTopology> {
    let mut topo = build_topology(cfg, rng)?;
    topo.ues = place_ues(cfg, &topo, rng)?;
    Ok(topo)
}

impl NetworkTopology {
    pub fn irs_per_cell(&self) -> usize {
        if self.small_cells.is_empty() {
            0
        } else {
            self.irs_panels.len() / self.small_cells.len()
        }
    }

    /// Index of the nearest small cell; ties go to the lowest index.
    pub fn serving_cell(&self, ue: &Position) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.small_cells.iter().enumerate() {
            let d = c.distance(ue);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Global IRS indices belonging to `cell`, in panel order.
    pub fn irs_of_cell(&self, cell: usize) -> Vec<usize> {
        self.irs_panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.cell == cell)
            .map(|(i, _)| i)
            .collect()
    }

    /// Candidate IRS set of UE `ue_index`: the whole ring of its serving cell.
    pub fn candidate_irs_set(&self, ue_index: usize) -> Vec<usize> {
        self.irs_of_cell(self.serving_cell(&self.ues[ue_index]))
    }

    pub fn eavesdroppers_of_cell(&self, cell: usize) -> Vec<usize> {
        self.eavesdroppers
            .iter()
            .enumerate()
            .filter(|(_, e)| e.cell == cell)
            .map(|(i, _)| i)
            .collect()
    }

    /// Where the UE lies relative to the grid, mostly for assertions.
    pub fn contains(&self, p: &Position) -> bool {
        p.inside_square(self.grid_side)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn default_layout_has_sixteen_panels_on_20m_rings() {
        let cfg = TopologyConfig::default();
        let topo = build_topology(&cfg, &mut rng(1)).unwrap();
        assert_eq!(topo.macro_bs, Position::new(100.0, 100.0));
        assert_eq!(topo.irs_panels.len(), 16);
        for p in &topo.irs_panels {
            let d = p.position.distance(&topo.small_cells[p.cell]);
            assert!((d - 20.0).abs() < 1e-9, "panel at {d} m");
        }
    }

    #[test]
    fn four_panels_sit_on_the_axes() {
        let cfg = TopologyConfig {
            grid_side: 100.0,
            small_cell_offsets: vec![Position::new(0.0, 0.0)],
            irs_per_cell: 4,
            ..TopologyConfig::default()
        };
        let topo = build_topology(&cfg, &mut rng(3)).unwrap();
        let c = topo.small_cells[0];
        let expected = [(20.0, 0.0), (0.0, 20.0), (-20.0, 0.0), (0.0, -20.0)];
        for (panel, (dx, dy)) in topo.irs_panels.iter().zip(expected) {
            assert!((panel.position.x - c.x - dx).abs() < 1e-9);
            assert!((panel.position.y - c.y - dy).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_same_topology() {
        let cfg = TopologyConfig {
            distribution_case: DistributionCase::Clustered,
            ..TopologyConfig::default()
        };
        let a = generate(&cfg, &mut rng(42)).unwrap();
        let b = generate(&cfg, &mut rng(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eavesdroppers_sit_outside_the_ring() {
        let cfg = TopologyConfig::default();
        let topo = build_topology(&cfg, &mut rng(9)).unwrap();
        assert_eq!(topo.eavesdroppers.len(), 4);
        for e in &topo.eavesdroppers {
            assert!(e.position.distance(&topo.small_cells[e.cell]) > cfg.irs_radius);
        }
    }

    #[test]
    fn rejects_cell_ring_outside_grid() {
        let cfg = TopologyConfig {
            small_cell_offsets: vec![Position::new(85.0, 0.0)],
            ..TopologyConfig::default()
        };
        let err = build_topology(&cfg, &mut rng(0)).unwrap_err();
        assert!(matches!(err, Error::CellOutsideGrid { cell: 0, .. }));
    }

    #[test]
    fn rejects_single_panel_ring() {
        let cfg = TopologyConfig {
            irs_per_cell: 1,
            ..TopologyConfig::default()
        };
        assert!(matches!(
            cfg.validate(),
            Err(Error::InvalidConfig { key: "topology.irs_per_cell", .. })
        ));
    }

    #[test]
    fn random_ues_stay_in_grid() {
        let cfg = TopologyConfig::default();
        let topo = generate(&cfg, &mut rng(5)).unwrap();
        assert_eq!(topo.ues.len(), 20);
        assert!(topo.ues.iter().all(|u| topo.contains(u)));
    }

    #[test]
    fn clustered_gives_two_clusters_of_ten() {
        let cfg = TopologyConfig {
            distribution_case: DistributionCase::Clustered,
            cluster_spread: 0.0,
            ..TopologyConfig::default()
        };
        let topo = generate(&cfg, &mut rng(11)).unwrap();
        assert_eq!(topo.ues.len(), 20);
        let first = topo.ues[0];
        let second = topo.ues[10];
        assert!(topo.ues[..10].iter().all(|u| *u == first));
        assert!(topo.ues[10..].iter().all(|u| *u == second));
        assert_ne!(first, second);
    }

    #[test]
    fn clustered_rejects_uneven_split() {
        let cfg = TopologyConfig {
            distribution_case: DistributionCase::Clustered,
            ue_count: 15,
            ..TopologyConfig::default()
        };
        let topo = build_topology(&TopologyConfig::default(), &mut rng(0)).unwrap();
        let err = place_ues(&cfg, &topo, &mut rng(0)).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { key: "topology.ue_count", .. }));
    }

    #[test]
    fn serving_cell_rules() {
        let topo = build_topology(&TopologyConfig::default(), &mut rng(0)).unwrap();
        assert_eq!(topo.serving_cell(&topo.small_cells[1]), 1);
        // (100, y) is equidistant from (50,100) and (150,100)
        assert_eq!(topo.serving_cell(&Position::new(100.0, 37.0)), 0);
        assert_eq!(topo.serving_cell(&Position::new(200.0, 200.0)), 1);
        assert_eq!(topo.serving_cell(&Position::new(0.0, 0.0)), 0);
    }

    #[test]
    fn candidate_sets_partition_panels() {
        let mut topo = build_topology(&TopologyConfig::default(), &mut rng(0)).unwrap();
        topo.ues = vec![
            Position::new(10.0, 10.0),
            Position::new(190.0, 10.0),
            Position::new(30.0, 150.0),
        ];
        let a = topo.candidate_irs_set(0);
        let b = topo.candidate_irs_set(1);
        assert_eq!(a, (0..8).collect::<Vec<_>>());
        assert_eq!(b, (8..16).collect::<Vec<_>>());
        assert_eq!(topo.candidate_irs_set(2), a);
    }
}
