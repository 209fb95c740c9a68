//! Finite measures on `[0, 1]` represented as weighted atoms.
//!
//! Every coordination measure of the model (coalescence, death, reproduction,
//! migration) is an [`AtomicMeasure`]. An atom at `y = 0` stands for the
//! classical independent mechanism (one individual, or one pair, at a time);
//! an atom at `y > 0` is a Poisson stream of coordinated events in which each
//! present individual joins independently with probability `y`.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

use crate::math;

/// Smallest accepted positive atom location. Rates scale like `1/y` or `1/y^2`.
pub const DEFAULT_LOCATION_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("atom location {0} is outside [0, 1]")]
    LocationOutOfRange(f64),
    #[error("atom mass {0} is negative")]
    NegativeMass(f64),
    #[error("atom ({y}, {mass}) is not finite")]
    NonFinite { y: f64, mass: f64 },
    #[error(
        "atom location {y} is positive but below the floor {floor}; its event rate w/y^2 would \
         diverge, use an exact zero atom for independent events instead"
    )]
    BelowFloor { y: f64, floor: f64 },
    #[error("event rates are only defined for positive atom locations, got y = {0}")]
    ZeroLocation(f64),
    #[error("density is negative ({value}) at y = {y}")]
    NegativeDensity { y: f64, value: f64 },
    #[error("at least one atom is required for atomization")]
    NoAtoms,
}

/// One weighted point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub y: f64,
    pub mass: f64,
}

impl Atom {
    pub const fn new(y: f64, mass: f64) -> Self {
        Atom { y, mass }
    }
}

/// Mechanism a measure drives. Coalescence uses the `1/y^2` intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Migration,
    Death,
    Reproduction,
    Coalescence,
}

impl EventKind {
    pub const ALL: [EventKind; 4] = [
        EventKind::Migration,
        EventKind::Death,
        EventKind::Reproduction,
        EventKind::Coalescence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Migration => "migration",
            EventKind::Death => "death",
            EventKind::Reproduction => "reproduction",
            EventKind::Coalescence => "coalescence",
        }
    }

    /// Fewest participants for the event to change the state.
    pub fn min_participants(self) -> u64 {
        match self {
            EventKind::Coalescence => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A finite measure on `[0, 1]` in canonical form: atoms sorted by location,
/// duplicate locations merged, zero-mass atoms dropped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

/// `mu = c * delta_0 + mu'` with `mu'({0}) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSplit {
    pub mass_at_zero: f64,
    pub positive_atoms: Vec<Atom>,
}

impl MeasureSplit {
    pub fn recombine(&self) -> AtomicMeasure {
        let mut atoms = Vec::with_capacity(self.positive_atoms.len() + 1);
        if self.mass_at_zero > 0.0 {
            atoms.push(Atom::new(0.0, self.mass_at_zero));
        }
        atoms.extend_from_slice(&self.positive_atoms);
        AtomicMeasure { atoms }
    }
}

impl AtomicMeasure {
    /// The zero measure.
    pub const fn zero() -> Self {
        AtomicMeasure { atoms: Vec::new() }
    }

    /// `mass * delta_y`.
    pub fn dirac(y: f64, mass: f64) -> Result<Self, MeasureError> {
        Self::new([(y, mass)])
    }

    /// Builds a measure from `(location, mass)` pairs with the default location floor.
    pub fn new<I>(atoms: I) -> Result<Self, MeasureError>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        Self::with_floor(atoms, DEFAULT_LOCATION_FLOOR)
    }

    /// Builds a measure, rejecting positive locations below `floor`.
    pub fn with_floor<I>(atoms: I, floor: f64) -> Result<Self, MeasureError>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut out: Vec<Atom> = Vec::new();
        for (y, mass) in atoms {
            if !y.is_finite() || !mass.is_finite() {
                return Err(MeasureError::NonFinite { y, mass });
            }
            if !(0.0..=1.0).contains(&y) {
                return Err(MeasureError::LocationOutOfRange(y));
            }
            if mass < 0.0 {
                return Err(MeasureError::NegativeMass(mass));
            }
            if y > 0.0 && y < floor {
                return Err(MeasureError::BelowFloor { y, floor });
            }
            out.push(Atom::new(y, mass));
        }
        out.sort_by(|a, b| a.y.total_cmp(&b.y));
        let mut merged: Vec<Atom> = Vec::with_capacity(out.len());
        for atom in out {
            match merged.last_mut() {
                Some(last) if last.y == atom.y => last.mass += atom.mass,
                _ => merged.push(atom),
            }
        }
        merged.retain(|a| a.mass > 0.0);
        Ok(AtomicMeasure { atoms: merged })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn mass_at_zero(&self) -> f64 {
        match self.atoms.first() {
            Some(a) if a.y == 0.0 => a.mass,
            _ => 0.0,
        }
    }

    pub fn positive_atoms(&self) -> impl Iterator<Item = &Atom> + '_ {
        self.atoms.iter().filter(|a| a.y > 0.0)
    }

    pub fn split(&self) -> MeasureSplit {
        MeasureSplit {
            mass_at_zero: self.mass_at_zero(),
            positive_atoms: self.positive_atoms().copied().collect(),
        }
    }

    /// Same total mass, concentrated at `y`.
    pub fn concentrated_at(&self, y: f64) -> Result<Self, MeasureError> {
        Self::new([(y, self.total_mass())])
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, MeasureError> {
        Self::new(self.atoms.iter().map(|a| (a.y, a.mass * factor)))
    }

    /// Sum of two measures.
    pub fn plus(&self, other: &AtomicMeasure) -> AtomicMeasure {
        let atoms = self
            .atoms
            .iter()
            .chain(other.atoms.iter())
            .map(|a| (a.y, a.mass));
        // Both inputs are already valid, so the union is too.
        Self::with_floor(atoms, 0.0).expect("sum of valid measures is valid")
    }
}

/// Poissonized clock rate of a positive atom: `w/y`, or `w/y^2` for coalescence.
pub fn event_rate(atom: Atom, kind: EventKind) -> Result<f64, MeasureError> {
    if !(atom.y > 0.0 && atom.y <= 1.0) {
        return Err(MeasureError::ZeroLocation(atom.y));
    }
    Ok(match kind {
        EventKind::Coalescence => atom.mass / (atom.y * atom.y),
        _ => atom.mass / atom.y,
    })
}

/// Rate at which a positive atom produces an event that actually changes a
/// vertex holding `n` individuals. Used for bounds and for the exact oracle.
pub fn effective_rate(atom: Atom, kind: EventKind, n: u64) -> f64 {
    let y = atom.y;
    let none = math::powi(1.0 - y, n);
    match kind {
        EventKind::Coalescence => {
            let one = if n == 0 {
                0.0
            } else {
                n as f64 * y * math::powi(1.0 - y, n - 1)
            };
            (atom.mass / (y * y)) * (1.0 - none - one).max(0.0)
        }
        _ => (atom.mass / y) * (1.0 - none),
    }
}

/// Number of the `n` present individuals that join an event of impact `y`.
pub fn participation_count<R: Rng + ?Sized>(n: u64, y: f64, rng: &mut R) -> u64 {
    if n == 0 || y <= 0.0 {
        return 0;
    }
    if y >= 1.0 {
        return n;
    }
    Binomial::new(n, y).expect("y in (0,1)").sample(rng)
}

/// Midpoint-rule atomization of a density on `(0, 1]`.
#[derive(Debug, Clone)]
pub struct Atomization {
    pub measure: AtomicMeasure,
    /// Richardson estimate of the quadrature error of the total mass.
    pub error_estimate: f64,
}

pub fn atomize_density<F>(density: F, n_atoms: usize) -> Result<Atomization, MeasureError>
where
    F: Fn(f64) -> f64,
{
    if n_atoms == 0 {
        return Err(MeasureError::NoAtoms);
    }
    let h = 1.0 / n_atoms as f64;
    let mut atoms = Vec::with_capacity(n_atoms);
    for i in 0..n_atoms {
        let y = (i as f64 + 0.5) * h;
        let value = density(y);
        if !(value >= 0.0) {
            return Err(MeasureError::NegativeDensity { y, value });
        }
        atoms.push((y, value * h));
    }
    let measure = AtomicMeasure::new(atoms)?;

    // Refined midpoint sum; its difference to the coarse sum estimates the
    // coarse error (ratio 4 for a second-order rule).
    let hf = h / 2.0;
    let mut fine = 0.0;
    for i in 0..2 * n_atoms {
        let y = (i as f64 + 0.5) * hf;
        let value = density(y);
        if !(value >= 0.0) {
            return Err(MeasureError::NegativeDensity { y, value });
        }
        fine += value * hf;
    }
    let error_estimate = 4.0 * (fine - measure.total_mass()).abs() / 3.0;
    Ok(Atomization {
        measure,
        error_estimate,
    })
}
