//! Scalar views of a [`ModelState`], named with 1-based indices, e.g.
//! `kappa[1,2,1]`, `alpha[3,1]`, `beta[2,17]`, `tau`.

use std::fmt;
use std::str::FromStr;

use crate::data::Layout;
use crate::error::{Error, Result};
use crate::model::ModelState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Kappa,
    Alpha,
    Beta,
    Gamma,
    P,
    /// beta * gamma, the log-fold difference against the control group.
    Effect,
    Tau,
    Sigma,
}

impl ParamKind {
    pub const ALL: [ParamKind; 8] = [
        ParamKind::Kappa,
        ParamKind::Alpha,
        ParamKind::Beta,
        ParamKind::Gamma,
        ParamKind::P,
        ParamKind::Effect,
        ParamKind::Tau,
        ParamKind::Sigma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamKind::Kappa => "kappa",
            ParamKind::Alpha => "alpha",
            ParamKind::Beta => "beta",
            ParamKind::Gamma => "gamma",
            ParamKind::P => "p",
            ParamKind::Effect => "effect",
            ParamKind::Tau => "tau",
            ParamKind::Sigma => "sigma",
        }
    }
}

impl FromStr for ParamKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown parameter kind `{s}`")))
    }
}

/// One scalar of the state. Indices are flat layout indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamId {
    Kappa(usize),
    Alpha(usize),
    Beta(usize),
    Gamma(usize),
    P(usize),
    Effect(usize),
    Tau,
    Sigma,
}

impl ParamId {
    pub fn kind(self) -> ParamKind {
        match self {
            ParamId::Kappa(_) => ParamKind::Kappa,
            ParamId::Alpha(_) => ParamKind::Alpha,
            ParamId::Beta(_) => ParamKind::Beta,
            ParamId::Gamma(_) => ParamKind::Gamma,
            ParamId::P(_) => ParamKind::P,
            ParamId::Effect(_) => ParamKind::Effect,
            ParamId::Tau => ParamKind::Tau,
            ParamId::Sigma => ParamKind::Sigma,
        }
    }

    #[inline]
    pub fn value(self, state: &ModelState) -> f64 {
        match self {
            ParamId::Kappa(s) => state.kappa[s],
            ParamId::Alpha(k) => state.alpha[k],
            ParamId::Beta(c) => f64::from(u8::from(state.beta[c])),
            ParamId::Gamma(c) => state.gamma[c],
            ParamId::P(c) => state.p[c],
            ParamId::Effect(c) => state.effect(c),
            ParamId::Tau => state.tau,
            ParamId::Sigma => state.sigma(),
        }
    }

    pub fn name(self, layout: &Layout) -> String {
        ParamName { id: self, layout }.to_string()
    }
}

struct ParamName<'a> {
    id: ParamId,
    layout: &'a Layout,
}

impl fmt::Display for ParamName<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = self.layout;
        let cell = |c: usize| (c / l.num_proteins + 1, c % l.num_proteins + 1);
        match self.id {
            ParamId::Kappa(s) => {
                let (e, g, i) = l.slot_coords(s);
                write!(f, "kappa[{},{},{}]", e + 1, g + 1, i + 1)
            }
            ParamId::Alpha(k) => {
                let (j, kk) = l.spectrum_coords(k);
                write!(f, "alpha[{},{}]", j + 1, kk + 1)
            }
            ParamId::Beta(c) => write!(f, "beta[{},{}]", cell(c).0, cell(c).1),
            ParamId::Gamma(c) => write!(f, "gamma[{},{}]", cell(c).0, cell(c).1),
            ParamId::P(c) => write!(f, "p[{},{}]", cell(c).0, cell(c).1),
            ParamId::Effect(c) => write!(f, "effect[{},{}]", cell(c).0, cell(c).1),
            ParamId::Tau => f.write_str("tau"),
            ParamId::Sigma => f.write_str("sigma"),
        }
    }
}

/// Parameters of the given kinds that actually vary: reference kappas and
/// control-group cells are left out.
pub fn free_params(layout: &Layout, kinds: &[ParamKind]) -> Vec<ParamId> {
    let mut out = Vec::new();
    let treatment_cells = layout.num_proteins..layout.num_cells();
    for &kind in kinds {
        match kind {
            ParamKind::Kappa => out.extend(
                (0..layout.num_slots())
                    .filter(|&s| !layout.is_reference(s))
                    .map(ParamId::Kappa),
            ),
            ParamKind::Alpha => out.extend((0..layout.num_spectra()).map(ParamId::Alpha)),
            ParamKind::Beta => out.extend(treatment_cells.clone().map(ParamId::Beta)),
            ParamKind::Gamma => out.extend(treatment_cells.clone().map(ParamId::Gamma)),
            ParamKind::P => out.extend(treatment_cells.clone().map(ParamId::P)),
            ParamKind::Effect => out.extend(treatment_cells.clone().map(ParamId::Effect)),
            ParamKind::Tau => out.push(ParamId::Tau),
            ParamKind::Sigma => out.push(ParamId::Sigma),
        }
    }
    out
}

/// Everything written to a trace file: all kappas (references included, so
/// the design can be read back), alphas, treatment-cell beta/gamma/p, tau and
/// sigma.
pub fn trace_params(layout: &Layout) -> Vec<ParamId> {
    let mut out: Vec<ParamId> = (0..layout.num_slots()).map(ParamId::Kappa).collect();
    out.extend(free_params(
        layout,
        &[
            ParamKind::Alpha,
            ParamKind::Beta,
            ParamKind::Gamma,
            ParamKind::P,
            ParamKind::Tau,
            ParamKind::Sigma,
        ],
    ));
    out
}

/// Splits `kappa[1,2,3]` into ("kappa", [1, 2, 3]); plain names give no indices.
pub fn parse_name(name: &str) -> Result<(ParamKind, Vec<usize>)> {
    let bad = || Error::Invalid(format!("malformed parameter name `{name}`"));
    match name.split_once('[') {
        None => Ok((name.parse()?, Vec::new())),
        Some((kind, rest)) => {
            let inner = rest.strip_suffix(']').ok_or_else(bad)?;
            let idx = inner
                .split(',')
                .map(|x| x.trim().parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            if idx.contains(&0) {
                return Err(bad());
            }
            Ok((kind.parse()?, idx))
        }
    }
}
