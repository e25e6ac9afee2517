//! Observation table and experimental design.
//!
//! Observations are stored as a ragged list: a reporter ion that was not
//! quantified is simply absent, there is no sentinel value. All indices are
//! 0-based in memory; the text formats in [`crate::io`] use 1-based indices.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Full coordinate of one reporter-ion measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coordinate {
    pub experiment: usize,
    pub group: usize,
    pub sample: usize,
    pub protein: usize,
    pub spectrum: usize,
}

impl fmt::Display for Coordinate {
    /// Printed 1-based, in file column order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(experiment {}, group {}, sample {}, protein {}, spectrum {})",
            self.experiment + 1,
            self.group + 1,
            self.sample + 1,
            self.protein + 1,
            self.spectrum + 1
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub experiment: usize,
    pub group: usize,
    pub sample: usize,
    pub protein: usize,
    pub spectrum: usize,
    /// Natural-log reporter-ion intensity.
    pub log_intensity: f64,
}

impl Observation {
    pub fn new(coord: Coordinate, log_intensity: f64) -> Self {
        Observation {
            experiment: coord.experiment,
            group: coord.group,
            sample: coord.sample,
            protein: coord.protein,
            spectrum: coord.spectrum,
            log_intensity,
        }
    }

    pub fn coordinate(&self) -> Coordinate {
        Coordinate {
            experiment: self.experiment,
            group: self.group,
            sample: self.sample,
            protein: self.protein,
            spectrum: self.spectrum,
        }
    }

    /// Key used to put observations in canonical order: protein-major so that
    /// per-spectrum and per-(group, protein) accumulators are touched locally.
    fn sort_key(&self) -> (usize, usize, usize, usize, usize) {
        (
            self.protein,
            self.spectrum,
            self.experiment,
            self.group,
            self.sample,
        )
    }
}

/// Experimental design: how many experiments, groups, proteins and tags, and
/// which sample anchors the normalisation of each experiment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignInfo {
    pub num_experiments: usize,
    pub num_groups: usize,
    pub num_proteins: usize,
    /// m_j: number of MS/MS spectra assigned to each protein.
    pub spectra_per_protein: Vec<usize>,
    /// n_eg: samples of group g in experiment e (E rows of G entries).
    pub samples_per_cell: Vec<Vec<usize>>,
    /// Per experiment, the group whose first sample is the reference.
    pub reference_group: Vec<usize>,
    /// n_I: isobaric tags used in every experiment.
    pub tags_per_experiment: usize,
}

impl DesignInfo {
    /// Design violations, independent of any observations.
    pub fn check(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.spectra_per_protein.len() != self.num_proteins {
            out.push(Violation::Shape(format!(
                "spectra_per_protein has {} entries but P = {}",
                self.spectra_per_protein.len(),
                self.num_proteins
            )));
        }
        for (j, &m) in self.spectra_per_protein.iter().enumerate() {
            if m == 0 {
                out.push(Violation::NoSpectra { protein: j });
            }
        }
        if self.samples_per_cell.len() != self.num_experiments {
            out.push(Violation::Shape(format!(
                "samples table has {} rows but E = {}",
                self.samples_per_cell.len(),
                self.num_experiments
            )));
        }
        if self.reference_group.len() != self.num_experiments {
            out.push(Violation::Shape(format!(
                "reference group list has {} entries but E = {}",
                self.reference_group.len(),
                self.num_experiments
            )));
        }
        for (e, row) in self.samples_per_cell.iter().enumerate() {
            if row.len() != self.num_groups {
                out.push(Violation::Shape(format!(
                    "samples table row {} has {} entries but G = {}",
                    e + 1,
                    row.len(),
                    self.num_groups
                )));
                continue;
            }
            let total: usize = row.iter().sum();
            if total != self.tags_per_experiment {
                out.push(Violation::TagCountMismatch {
                    experiment: e,
                    total,
                    expected: self.tags_per_experiment,
                });
            }
            if let Some(&g_ref) = self.reference_group.get(e) {
                if g_ref >= self.num_groups || row[g_ref] == 0 {
                    out.push(Violation::MissingReference { experiment: e });
                }
            }
        }
        out
    }

    /// Infers E, G, P, m and n from the largest index seen in each position.
    /// The reference group cannot be inferred and must be supplied.
    pub fn infer(observations: &[Observation], reference_group: Vec<usize>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::Config(
                "cannot infer the design from an empty observation table".into(),
            ));
        }
        let num_experiments = observations
            .iter()
            .map(|o| o.experiment + 1)
            .max()
            .unwrap_or(0);
        let num_groups = observations.iter().map(|o| o.group + 1).max().unwrap_or(0);
        let num_proteins = observations
            .iter()
            .map(|o| o.protein + 1)
            .max()
            .unwrap_or(0);
        let mut spectra_per_protein = vec![0; num_proteins];
        let mut samples_per_cell = vec![vec![0; num_groups]; num_experiments];
        for o in observations {
            let m = &mut spectra_per_protein[o.protein];
            *m = (*m).max(o.spectrum + 1);
            let n = &mut samples_per_cell[o.experiment][o.group];
            *n = (*n).max(o.sample + 1);
        }
        if reference_group.len() != num_experiments {
            return Err(Error::Config(format!(
                "g_ref lists {} experiments but the data contain {}",
                reference_group.len(),
                num_experiments
            )));
        }
        let tags_per_experiment = samples_per_cell
            .iter()
            .map(|row| row.iter().sum::<usize>())
            .max()
            .unwrap_or(0);
        Ok(DesignInfo {
            num_experiments,
            num_groups,
            num_proteins,
            spectra_per_protein,
            samples_per_cell,
            reference_group,
            tags_per_experiment,
        })
    }

    pub fn total_spectra(&self) -> usize {
        self.spectra_per_protein.iter().sum()
    }

    /// Number of (e, g, i) reporter slots, i.e. E * n_I for a consistent design.
    pub fn total_samples(&self) -> usize {
        self.samples_per_cell.iter().flatten().sum()
    }

    /// Number of observations a complete dataset would hold.
    pub fn complete_count(&self) -> usize {
        self.total_samples() * self.total_spectra()
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self)
    }

    pub(crate) fn in_bounds(&self, c: &Coordinate) -> std::result::Result<(), &'static str> {
        if c.experiment >= self.num_experiments {
            return Err("experiment");
        }
        if c.group >= self.num_groups {
            return Err("group");
        }
        if c.protein >= self.num_proteins {
            return Err("protein");
        }
        if c.sample >= self.samples_per_cell[c.experiment][c.group] {
            return Err("sample");
        }
        if c.spectrum >= self.spectra_per_protein[c.protein] {
            return Err("spectrum");
        }
        Ok(())
    }
}

/// Flat parameter indexing derived from a [`DesignInfo`].
///
/// Sample slots run experiment-major, then group, then sample; spectrum slots
/// run protein-major; (group, protein) cells are `g * P + j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub num_groups: usize,
    pub num_proteins: usize,
    sample_offset: Vec<Vec<usize>>,
    spectrum_offset: Vec<usize>,
    slots: Vec<(usize, usize, usize)>,
    spectra: Vec<(usize, usize)>,
    reference_slots: Vec<usize>,
}

impl Layout {
    fn new(design: &DesignInfo) -> Self {
        let mut sample_offset = Vec::with_capacity(design.num_experiments);
        let mut slots = Vec::new();
        for (e, row) in design.samples_per_cell.iter().enumerate() {
            let mut offs = Vec::with_capacity(row.len());
            for (g, &n) in row.iter().enumerate() {
                offs.push(slots.len());
                for i in 0..n {
                    slots.push((e, g, i));
                }
            }
            sample_offset.push(offs);
        }
        let mut spectrum_offset = Vec::with_capacity(design.num_proteins);
        let mut spectra = Vec::new();
        for (j, &m) in design.spectra_per_protein.iter().enumerate() {
            spectrum_offset.push(spectra.len());
            for k in 0..m {
                spectra.push((j, k));
            }
        }
        let reference_slots = design
            .reference_group
            .iter()
            .enumerate()
            .map(|(e, &g)| sample_offset[e][g])
            .collect();
        Layout {
            num_groups: design.num_groups,
            num_proteins: design.num_proteins,
            sample_offset,
            spectrum_offset,
            slots,
            spectra,
            reference_slots,
        }
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn num_spectra(&self) -> usize {
        self.spectra.len()
    }

    pub fn num_cells(&self) -> usize {
        self.num_groups * self.num_proteins
    }

    pub fn slot(&self, experiment: usize, group: usize, sample: usize) -> usize {
        self.sample_offset[experiment][group] + sample
    }

    /// (experiment, group, sample) of a slot.
    pub fn slot_coords(&self, slot: usize) -> (usize, usize, usize) {
        self.slots[slot]
    }

    pub fn spectrum_slot(&self, protein: usize, spectrum: usize) -> usize {
        self.spectrum_offset[protein] + spectrum
    }

    /// (protein, spectrum) of a spectrum slot.
    pub fn spectrum_coords(&self, slot: usize) -> (usize, usize) {
        self.spectra[slot]
    }

    pub fn cell(&self, group: usize, protein: usize) -> usize {
        group * self.num_proteins + protein
    }

    pub fn is_reference(&self, slot: usize) -> bool {
        self.reference_slots.contains(&slot)
    }

    pub fn reference_slots(&self) -> &[usize] {
        &self.reference_slots
    }
}

/// A single invariant violation, reported with its coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    OutOfBounds {
        row: usize,
        coordinate: Coordinate,
        field: &'static str,
    },
    NonFinite {
        row: usize,
        coordinate: Coordinate,
    },
    DuplicateCoordinate {
        coordinate: Coordinate,
        rows: (usize, usize),
    },
    TagCountMismatch {
        experiment: usize,
        total: usize,
        expected: usize,
    },
    MissingReference {
        experiment: usize,
    },
    NoSpectra {
        protein: usize,
    },
    Shape(String),
}

impl Violation {
    /// Index of the offending observation, for row-level violations.
    pub fn row(&self) -> Option<usize> {
        match self {
            Violation::OutOfBounds { row, .. } | Violation::NonFinite { row, .. } => Some(*row),
            Violation::DuplicateCoordinate { rows, .. } => Some(rows.1),
            _ => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfBounds {
                row,
                coordinate,
                field,
            } => write!(
                f,
                "row {}: {field} index out of bounds at {coordinate}",
                row + 1
            ),
            Violation::NonFinite { row, coordinate } => {
                write!(
                    f,
                    "row {}: non-finite log-intensity at {coordinate}",
                    row + 1
                )
            }
            Violation::DuplicateCoordinate { coordinate, rows } => write!(
                f,
                "duplicate coordinate {coordinate} in rows {} and {}",
                rows.0 + 1,
                rows.1 + 1
            ),
            Violation::TagCountMismatch {
                experiment,
                total,
                expected,
            } => write!(
                f,
                "tag count mismatch in experiment {}: samples sum to {total}, n_I = {expected}",
                experiment + 1
            ),
            Violation::MissingReference { experiment } => {
                write!(f, "experiment {} has no reference sample", experiment + 1)
            }
            Violation::NoSpectra { protein } => {
                write!(f, "protein {} has no spectra (m_j = 0)", protein + 1)
            }
            Violation::Shape(msg) => write!(f, "design shape: {msg}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub design: DesignInfo,
    pub observations: Vec<Observation>,
}

impl Dataset {
    pub fn new(design: DesignInfo, observations: Vec<Observation>) -> Self {
        Dataset {
            design,
            observations,
        }
    }

    /// Observations in canonical coordinate order.
    pub fn sorted_observations(&self) -> Vec<Observation> {
        let mut obs = self.observations.clone();
        obs.sort_by_key(|o| o.sort_key());
        obs
    }

    /// Drops every (experiment, protein, spectrum) readout that lacks any of
    /// the experiment's reporter ions.
    pub fn require_complete(&self) -> Dataset {
        let mut counts: HashMap<(usize, usize, usize), usize> = HashMap::new();
        for o in &self.observations {
            *counts
                .entry((o.experiment, o.protein, o.spectrum))
                .or_default() += 1;
        }
        let per_experiment: Vec<usize> = self
            .design
            .samples_per_cell
            .iter()
            .map(|row| row.iter().sum())
            .collect();
        let observations = self
            .observations
            .iter()
            .filter(|o| {
                counts[&(o.experiment, o.protein, o.spectrum)] == per_experiment[o.experiment]
            })
            .copied()
            .collect();
        Dataset::new(self.design.clone(), observations)
    }
}

/// Checks every dataset invariant; violations are collected, not raised.
pub fn validate(dataset: &Dataset) -> ValidationReport {
    let design = &dataset.design;
    let mut violations = design.check();
    let shape_ok = !violations.iter().any(|v| matches!(v, Violation::Shape(_)));
    let mut seen: HashMap<Coordinate, usize> = HashMap::with_capacity(dataset.observations.len());
    for (row, o) in dataset.observations.iter().enumerate() {
        let coordinate = o.coordinate();
        if shape_ok {
            if let Err(field) = design.in_bounds(&coordinate) {
                violations.push(Violation::OutOfBounds {
                    row,
                    coordinate,
                    field,
                });
            }
        }
        if !o.log_intensity.is_finite() {
            violations.push(Violation::NonFinite { row, coordinate });
        }
        if let Some(first) = seen.insert(coordinate, row) {
            violations.push(Violation::DuplicateCoordinate {
                coordinate,
                rows: (first, row),
            });
        }
    }
    ValidationReport { violations }
}

/// A validated dataset with the per-observation parameter indices the
/// sampler needs, built once.
///
/// Observations are held in canonical order, so everything computed from an
/// `IndexedData` is independent of the row order of the source table.
#[derive(Debug, Clone)]
pub struct IndexedData {
    design: DesignInfo,
    layout: Layout,
    observations: Vec<Observation>,
    pub(crate) y: Vec<f64>,
    pub(crate) slot: Vec<u32>,
    pub(crate) spectrum: Vec<u32>,
    pub(crate) cell: Vec<u32>,
    pub(crate) slot_count: Vec<u32>,
    pub(crate) spectrum_count: Vec<u32>,
    pub(crate) cell_count: Vec<u32>,
    positions: HashMap<Coordinate, usize>,
}

impl IndexedData {
    pub fn new(dataset: &Dataset) -> Result<Self> {
        let report = validate(dataset);
        if !report.is_ok() {
            return Err(Error::Validation(report.violations));
        }
        let design = dataset.design.clone();
        let layout = design.layout();
        let observations = dataset.sorted_observations();
        let n = observations.len();
        let mut y = Vec::with_capacity(n);
        let mut slot = Vec::with_capacity(n);
        let mut spectrum = Vec::with_capacity(n);
        let mut cell = Vec::with_capacity(n);
        let mut slot_count = vec![0u32; layout.num_slots()];
        let mut spectrum_count = vec![0u32; layout.num_spectra()];
        let mut cell_count = vec![0u32; layout.num_cells()];
        let mut positions = HashMap::with_capacity(n);
        for (idx, o) in observations.iter().enumerate() {
            let s = layout.slot(o.experiment, o.group, o.sample);
            let k = layout.spectrum_slot(o.protein, o.spectrum);
            let c = layout.cell(o.group, o.protein);
            y.push(o.log_intensity);
            slot.push(s as u32);
            spectrum.push(k as u32);
            cell.push(c as u32);
            slot_count[s] += 1;
            spectrum_count[k] += 1;
            cell_count[c] += 1;
            positions.insert(o.coordinate(), idx);
        }
        Ok(IndexedData {
            design,
            layout,
            observations,
            y,
            slot,
            spectrum,
            cell,
            slot_count,
            spectrum_count,
            cell_count,
            positions,
        })
    }

    pub fn design(&self) -> &DesignInfo {
        &self.design
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Observations in canonical order; index `i` matches the sampler's
    /// internal observation index.
    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn position(&self, coordinate: &Coordinate) -> Option<usize> {
        self.positions.get(coordinate).copied()
    }

    pub fn slot_count(&self, slot: usize) -> usize {
        self.slot_count[slot] as usize
    }

    pub fn spectrum_count(&self, spectrum: usize) -> usize {
        self.spectrum_count[spectrum] as usize
    }

    pub fn cell_count(&self, cell: usize) -> usize {
        self.cell_count[cell] as usize
    }

    pub fn to_dataset(&self) -> Dataset {
        Dataset::new(self.design.clone(), self.observations.clone())
    }
}
