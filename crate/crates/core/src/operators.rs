//! Overlap, kinetic and potential matrices over the symmetrized basis.
//!
//! Every basis function is `φ = f + P f` with `P` the particle exchange, so
//! for a `P`-symmetric operator `⟨φᵢ|O|φⱼ⟩ = 2 (⟨fᵢ|O|fⱼ⟩ + ⟨fᵢ|O|P fⱼ⟩)`.
//! The two pieces need integrals with decays `(2α, 2β)` and `(α+β, α+β)`
//! respectively. The volume element `8π² r₁ r₂ r₁₂` raises every power by
//! one and is applied here. Kinetic energy uses the gradient form
//! `½ ∫ (∇₁φᵢ·∇₁φⱼ + ∇₂φᵢ·∇₂φⱼ)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{enumerate_basis, BasisError, BasisSpec, HylleraasTerm};
use crate::integrals::{IntegralError, IntegralTable};
use crate::matrix::Matrix;
use crate::precision::{PrecisionError, Real};

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error(transparent)]
    Integral(#[from] IntegralError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("wavefunction is not normalized (<Psi|Psi> = {0})")]
    Unnormalized(f64),
    #[error("archive: {0}")]
    Archive(String),
    #[error(transparent)]
    Precision(#[from] PrecisionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SystemKind {
    /// Two electrons around an infinitely heavy nucleus of charge `z`.
    NucleusFixed { z: f64 },
    /// Two electrons and a positron, coordinates relative to the positron.
    PsMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub interaction_on: bool,
}

impl SystemSpec {
    pub fn nucleus(z: f64) -> Self {
        Self {
            kind: SystemKind::NucleusFixed { z },
            interaction_on: true,
        }
    }

    pub fn hydrogen_anion() -> Self {
        Self::nucleus(1.0)
    }

    pub fn helium() -> Self {
        Self::nucleus(2.0)
    }

    pub fn lithium_cation() -> Self {
        Self::nucleus(3.0)
    }

    pub fn positronium_anion() -> Self {
        Self {
            kind: SystemKind::PsMinus,
            interaction_on: true,
        }
    }

    /// Independent electrons: the exact ground state is `e^{-Z(r₁+r₂)}`.
    pub fn non_interacting(z: f64) -> Self {
        Self {
            kind: SystemKind::NucleusFixed { z },
            interaction_on: false,
        }
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        match self.kind {
            SystemKind::NucleusFixed { z } if !(z.is_finite() && z > 0.0) => {
                Err(AssemblyError::InvalidSystem(format!("nuclear charge must be positive, got {z}")))
            }
            SystemKind::PsMinus if !self.interaction_on => Err(AssemblyError::InvalidSystem(
                "the electron-electron interaction can only be switched off for a fixed nucleus".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Charge attracting each electron.
    pub fn charge<R: Real>(&self) -> R {
        match self.kind {
            // Through the shortest decimal form so that 0.92 means 0.92 at
            // every precision rather than the nearest double.
            SystemKind::NucleusFixed { z } => R::parse_decimal(&format!("{z}")).expect("finite charge"),
            SystemKind::PsMinus => R::one(),
        }
    }

    pub fn z(&self) -> f64 {
        match self.kind {
            SystemKind::NucleusFixed { z } => z,
            SystemKind::PsMinus => 1.0,
        }
    }

    pub fn is_ps_minus(&self) -> bool {
        matches!(self.kind, SystemKind::PsMinus)
    }

    /// Screening start point for the exponents.
    pub fn default_exponent(&self) -> f64 {
        match self.kind {
            SystemKind::NucleusFixed { z } => z - 5.0 / 16.0,
            SystemKind::PsMinus => 0.5,
        }
    }
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match self.kind {
            SystemKind::PsMinus => "psminus".to_string(),
            SystemKind::NucleusFixed { z } if z == 1.0 => "hminus".into(),
            SystemKind::NucleusFixed { z } if z == 2.0 => "he".into(),
            SystemKind::NucleusFixed { z } if z == 3.0 => "liplus".into(),
            SystemKind::NucleusFixed { z } => format!("z:{z}"),
        };
        if self.interaction_on {
            write!(f, "{base}")
        } else {
            write!(f, "{base} (no e-e)")
        }
    }
}

impl FromStr for SystemSpec {
    type Err = AssemblyError;

    /// `hminus`, `he`, `liplus`, `psminus` or `z:<charge>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let spec = match s.trim().to_ascii_lowercase().as_str() {
            "hminus" | "h-" => Self::hydrogen_anion(),
            "he" => Self::helium(),
            "liplus" | "li+" => Self::lithium_cation(),
            "psminus" | "ps-" => Self::positronium_anion(),
            other => {
                let z = other
                    .strip_prefix("z:")
                    .and_then(|v| v.parse::<f64>().ok())
                    .ok_or_else(|| AssemblyError::InvalidSystem(format!("unknown system {s:?}")))?;
                Self::nucleus(z)
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Overlap and Hamiltonian with the kinetic and potential parts kept apart.
#[derive(Debug, Clone)]
pub struct MatrixPair<R> {
    pub size: usize,
    pub overlap: Matrix<R>,
    pub kinetic: Matrix<R>,
    pub potential: Matrix<R>,
    pub hamiltonian: Matrix<R>,
}

/// `e^{-a r₁ - b r₂} r₁^p r₂^q r₁₂^s` with its first derivatives written as
/// lists of `(coefficient, power shift)`.
#[derive(Debug, Clone)]
struct Monomial<R> {
    a: R,
    b: R,
    pows: [i64; 3],
    d1: Vec<Piece<R>>,
    d2: Vec<Piece<R>>,
    d12: Vec<Piece<R>>,
}

#[derive(Debug, Clone, Copy)]
struct Piece<R> {
    c: R,
    d: [i64; 3],
}

impl<R: Real> Monomial<R> {
    fn new(a: R, b: R, p: u32, q: u32, s: u32) -> Self {
        let mut d1 = Vec::with_capacity(2);
        let mut d2 = Vec::with_capacity(2);
        let mut d12 = Vec::with_capacity(1);
        // Zero powers contribute no r^{-1} term at all.
        if p > 0 {
            d1.push(Piece { c: R::from_i64(p as i64), d: [-1, 0, 0] });
        }
        d1.push(Piece { c: -a, d: [0, 0, 0] });
        if q > 0 {
            d2.push(Piece { c: R::from_i64(q as i64), d: [0, -1, 0] });
        }
        d2.push(Piece { c: -b, d: [0, 0, 0] });
        if s > 0 {
            d12.push(Piece { c: R::from_i64(s as i64), d: [0, 0, -1] });
        }
        Self {
            a,
            b,
            pows: [p as i64, q as i64, s as i64],
            d1,
            d2,
            d12,
        }
    }

    fn term(t: &HylleraasTerm, alpha: R, beta: R) -> Self {
        Self::new(alpha, beta, t.m, t.n, t.k)
    }

    fn exchanged(t: &HylleraasTerm, alpha: R, beta: R) -> Self {
        Self::new(beta, alpha, t.n, t.m, t.k)
    }
}

/// Geometric factors from the chain rule, as `(coefficient, shift)` lists.
struct DotFactors<R> {
    /// `r̂₁·(r⃗₁-r⃗₂)/r₁₂ = (r₁² - r₂² + r₁₂²) / (2 r₁ r₁₂)`
    r1_u: Vec<Piece<R>>,
    /// `r̂₂·(r⃗₁-r⃗₂)/r₁₂ = (r₁² - r₂² - r₁₂²) / (2 r₂ r₁₂)`
    r2_u: Vec<Piece<R>>,
    /// `r̂₁·r̂₂ = (r₁² + r₂² - r₁₂²) / (2 r₁ r₂)`
    r1_r2: Vec<Piece<R>>,
}

impl<R: Real> DotFactors<R> {
    fn new() -> Self {
        let h = R::one().mul_pow2(-1);
        let p = |c: R, d: [i64; 3]| Piece { c, d };
        Self {
            r1_u: vec![p(h, [1, 0, -1]), p(-h, [-1, 2, -1]), p(h, [-1, 0, 1])],
            r2_u: vec![p(h, [2, -1, -1]), p(-h, [0, 1, -1]), p(-h, [0, -1, 1])],
            r1_r2: vec![p(h, [1, -1, 0]), p(h, [-1, 1, 0]), p(-h, [-1, -1, 2])],
        }
    }
}

/// Raw matrix elements of one monomial pair, before the `16π²` factor.
#[derive(Debug, Clone, Copy)]
struct Elements<R> {
    overlap: R,
    kinetic: R,
    nuclear: R,
    repulsion: R,
}

struct Kernel<'a, R> {
    table: &'a IntegralTable<R>,
    base: [i64; 3],
}

impl<R: Real> Kernel<'_, R> {
    /// `Γ` at the pair's powers plus the volume element plus `d`.
    fn gamma(&self, d: [i64; 3]) -> Result<R, IntegralError> {
        self.table
            .get(self.base[0] + 1 + d[0], self.base[1] + 1 + d[1], self.base[2] + 1 + d[2])
    }

    /// `Σ x.c y.c Γ(x.d + y.d)`.
    fn pairs(&self, xs: &[Piece<R>], ys: &[Piece<R>]) -> Result<R, IntegralError> {
        let mut acc = R::zero();
        for x in xs {
            for y in ys {
                acc += x.c * y.c * self.gamma(add(x.d, y.d))?;
            }
        }
        Ok(acc)
    }

    /// `Σ x.c y.c z.c Γ(x.d + y.d + z.d)`.
    fn triples(&self, xs: &[Piece<R>], ys: &[Piece<R>], zs: &[Piece<R>]) -> Result<R, IntegralError> {
        let mut acc = R::zero();
        for x in xs {
            for y in ys {
                let c = x.c * y.c;
                let d = add(x.d, y.d);
                for z in zs {
                    acc += c * z.c * self.gamma(add(d, z.d))?;
                }
            }
        }
        Ok(acc)
    }
}

fn add(x: [i64; 3], y: [i64; 3]) -> [i64; 3] {
    [x[0] + y[0], x[1] + y[1], x[2] + y[2]]
}

fn pair_elements<R: Real>(
    gi: &Monomial<R>,
    gj: &Monomial<R>,
    table: &IntegralTable<R>,
    dots: &DotFactors<R>,
    ps_minus: bool,
) -> Result<Elements<R>, IntegralError> {
    let k = Kernel {
        table,
        base: add(gi.pows, gj.pows),
    };
    debug_assert!(table.decays() == (gi.a + gj.a, gi.b + gj.b));
    let overlap = k.gamma([0, 0, 0])?;
    let nuclear = k.gamma([-1, 0, 0])? + k.gamma([0, -1, 0])?;
    let repulsion = k.gamma([0, 0, -1])?;

    // ∇₁gᵢ·∇₁gⱼ + ∇₂gᵢ·∇₂gⱼ; ∇₂ carries -û so its cross term flips sign.
    let mut grad = k.pairs(&gi.d1, &gj.d1)? + k.pairs(&gi.d2, &gj.d2)?;
    grad += k.pairs(&gi.d12, &gj.d12)?.mul_pow2(1);
    grad += k.triples(&gi.d1, &gj.d12, &dots.r1_u)? + k.triples(&gi.d12, &gj.d1, &dots.r1_u)?;
    grad -= k.triples(&gi.d2, &gj.d12, &dots.r2_u)? + k.triples(&gi.d12, &gj.d2, &dots.r2_u)?;
    let mut kinetic = grad.mul_pow2(-1);

    if ps_minus {
        // Reduced mass ½ doubles the one-body part; the mass-polarization
        // term -∇₁·∇₂ enters as ½ (∇₁gᵢ·∇₂gⱼ + ∇₂gᵢ·∇₁gⱼ).
        let mut cross = k.pairs(&gi.d12, &gj.d12)?.mul_pow2(1);
        cross = -cross;
        cross += k.triples(&gi.d1, &gj.d2, &dots.r1_r2)? + k.triples(&gi.d2, &gj.d1, &dots.r1_r2)?;
        cross -= k.triples(&gi.d1, &gj.d12, &dots.r1_u)? + k.triples(&gi.d12, &gj.d1, &dots.r1_u)?;
        cross += k.triples(&gi.d12, &gj.d2, &dots.r2_u)? + k.triples(&gi.d2, &gj.d12, &dots.r2_u)?;
        kinetic = kinetic.mul_pow2(1) + cross.mul_pow2(-1);
    }
    Ok(Elements {
        overlap,
        kinetic,
        nuclear,
        repulsion,
    })
}

/// Highest total power any element needs: `2ω` from the basis, `3` from the
/// volume element and one more for `⟨r₁⟩`, `⟨r₁₂⟩`.
fn table_degree(omega: u32) -> usize {
    2 * omega as usize + 4
}

struct Prepared<R> {
    direct: IntegralTable<R>,
    exchange: IntegralTable<R>,
    plain: Vec<Monomial<R>>,
    swapped: Vec<Monomial<R>>,
}

fn prepare<R: Real>(basis: &BasisSpec<R>) -> Result<Prepared<R>, AssemblyError> {
    let (alpha, beta) = (basis.alpha, basis.beta);
    BasisSpec::new(basis.omega, alpha, beta)?;
    let degree = table_degree(basis.omega);
    Ok(Prepared {
        direct: IntegralTable::new(alpha.mul_pow2(1), beta.mul_pow2(1), degree)?,
        exchange: IntegralTable::new(alpha + beta, alpha + beta, degree)?,
        plain: basis.terms.iter().map(|t| Monomial::term(t, alpha, beta)).collect(),
        swapped: basis.terms.iter().map(|t| Monomial::exchanged(t, alpha, beta)).collect(),
    })
}

/// Symmetric matrices from the upper triangle of `element(i, j)`, rows in
/// parallel. The result does not depend on scheduling.
fn symmetric_fill<R: Real, const K: usize>(
    n: usize,
    element: impl Fn(usize, usize) -> Result<[R; K], AssemblyError> + Sync,
) -> Result<[Matrix<R>; K], AssemblyError> {
    let rows: Vec<Vec<[R; K]>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| element(i, j)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let mut out: [Matrix<R>; K] = std::array::from_fn(|_| Matrix::zeros(n, n));
    for (i, row) in rows.into_iter().enumerate() {
        for (off, vals) in row.into_iter().enumerate() {
            let j = i + off;
            for (m, v) in out.iter_mut().zip(vals) {
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
    }
    Ok(out)
}

/// Overlap, kinetic, potential and Hamiltonian matrices.
pub fn assemble<R: Real>(system: &SystemSpec, basis: &BasisSpec<R>) -> Result<MatrixPair<R>, AssemblyError> {
    system.validate()?;
    let prep = prepare(basis)?;
    let dots = DotFactors::new();
    let ps = system.is_ps_minus();
    let z = system.charge::<R>();
    let ee = system.interaction_on;
    let factor = (R::pi() * R::pi()).mul_pow2(4);
    let [overlap, kinetic, potential] = symmetric_fill(basis.len(), |i, j| {
        let d = pair_elements(&prep.plain[i], &prep.plain[j], &prep.direct, &dots, ps)?;
        let x = pair_elements(&prep.plain[i], &prep.swapped[j], &prep.exchange, &dots, ps)?;
        let mut v = -z * (d.nuclear + x.nuclear);
        if ee {
            v += d.repulsion + x.repulsion;
        }
        Ok([
            factor * (d.overlap + x.overlap),
            factor * (d.kinetic + x.kinetic),
            factor * v,
        ])
    })?;
    let hamiltonian = kinetic.add(&potential);
    Ok(MatrixPair {
        size: basis.len(),
        overlap,
        kinetic,
        potential,
        hamiltonian,
    })
}

/// Matrices of `1`, `(r₁ + r₂)/2` and `r₁₂`. The symmetrized `r₁` gives
/// `⟨r₁⟩` for any exchange-symmetric state.
fn geometric_matrices<R: Real>(basis: &BasisSpec<R>) -> Result<[Matrix<R>; 3], AssemblyError> {
    let prep = prepare(basis)?;
    let factor = (R::pi() * R::pi()).mul_pow2(4);
    symmetric_fill(basis.len(), |i, j| {
        let mut out = [R::zero(); 3];
        for (gj, table) in [(&prep.plain[j], &prep.direct), (&prep.swapped[j], &prep.exchange)] {
            let k = Kernel {
                table,
                base: add(prep.plain[i].pows, gj.pows),
            };
            out[0] += k.gamma([0, 0, 0])?;
            out[1] += (k.gamma([1, 0, 0])? + k.gamma([0, 1, 0])?).mul_pow2(-1);
            out[2] += k.gamma([0, 0, 1])?;
        }
        Ok(out.map(|v| factor * v))
    })
}

/// A normalized variational state.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction<R> {
    pub system: SystemSpec,
    pub basis: BasisSpec<R>,
    pub coefficients: Vec<R>,
    pub energy: R,
    pub metadata: BTreeMap<String, String>,
}

/// Normalization, `⟨r₁⟩` and `⟨r₁₂⟩` of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectations<R> {
    pub norm: R,
    pub r1: R,
    pub r12: R,
}

const NORM_TOLERANCE: f64 = 1e-12;

pub fn expectations<R: Real>(wf: &Wavefunction<R>) -> Result<Expectations<R>, AssemblyError> {
    let [s, r1, r12] = geometric_matrices(&wf.basis)?;
    let c = &wf.coefficients;
    let norm = s.bilinear(c, c);
    if (norm - R::one()).abs() > R::from_f64(NORM_TOLERANCE) {
        return Err(AssemblyError::Unnormalized(norm.to_f64()));
    }
    Ok(Expectations {
        norm,
        r1: r1.bilinear(c, c),
        r12: r12.bilinear(c, c),
    })
}

/// `⟨r₁⟩` in bohr for a normalized state.
pub fn expectation_r1<R: Real>(wf: &Wavefunction<R>) -> Result<R, AssemblyError> {
    expectations(wf).map(|e| e.r1)
}

/// `⟨r₁₂⟩` in bohr for a normalized state.
pub fn expectation_r12<R: Real>(wf: &Wavefunction<R>) -> Result<R, AssemblyError> {
    expectations(wf).map(|e| e.r12)
}

pub const ARCHIVE_FORMAT_VERSION: u32 = 1;

/// On-disk form of a [`Wavefunction`]; every real is a decimal string with
/// enough digits to reproduce the binary value exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavefunctionArchive {
    pub format_version: u32,
    pub system: SystemArchive,
    pub precision_bits: u32,
    pub omega: u32,
    pub alpha: String,
    pub beta: String,
    pub terms: Vec<[u32; 3]>,
    pub coefficients: Vec<String>,
    pub energy: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemArchive {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<String>,
    pub interaction_on: bool,
}

impl<R: Real> Wavefunction<R> {
    pub fn to_archive(&self) -> WavefunctionArchive {
        let system = match self.system.kind {
            SystemKind::NucleusFixed { z } => SystemArchive {
                kind: "nucleus-fixed".into(),
                z: Some(format!("{z}")),
                interaction_on: self.system.interaction_on,
            },
            SystemKind::PsMinus => SystemArchive {
                kind: "ps-minus".into(),
                z: None,
                interaction_on: self.system.interaction_on,
            },
        };
        WavefunctionArchive {
            format_version: ARCHIVE_FORMAT_VERSION,
            system,
            precision_bits: R::BITS,
            omega: self.basis.omega,
            alpha: self.basis.alpha.to_decimal(),
            beta: self.basis.beta.to_decimal(),
            terms: self.basis.terms.iter().map(|t| [t.k, t.m, t.n]).collect(),
            coefficients: self.coefficients.iter().map(|c| c.to_decimal()).collect(),
            energy: self.energy.to_decimal(),
            metadata: self.metadata.clone(),
        }
    }

    pub fn from_archive(a: &WavefunctionArchive) -> Result<Self, AssemblyError> {
        let bad = |m: String| AssemblyError::Archive(m);
        if a.format_version != ARCHIVE_FORMAT_VERSION {
            return Err(bad(format!("unsupported format_version {}", a.format_version)));
        }
        let kind = match a.system.kind.as_str() {
            "nucleus-fixed" => {
                let z = a
                    .system
                    .z
                    .as_deref()
                    .ok_or_else(|| bad("nucleus-fixed system without z".into()))?;
                let z = z.parse::<f64>().map_err(|_| bad(format!("bad charge {z:?}")))?;
                SystemKind::NucleusFixed { z }
            }
            "ps-minus" => SystemKind::PsMinus,
            other => return Err(bad(format!("unknown system kind {other:?}"))),
        };
        let system = SystemSpec {
            kind,
            interaction_on: a.system.interaction_on,
        };
        system.validate()?;
        let basis = BasisSpec::new(a.omega, R::parse_decimal(&a.alpha)?, R::parse_decimal(&a.beta)?)?;
        let expected: Vec<[u32; 3]> = enumerate_basis(a.omega).iter().map(|t| [t.k, t.m, t.n]).collect();
        if a.terms != expected {
            return Err(bad("term list does not match omega".into()));
        }
        if a.coefficients.len() != basis.len() {
            return Err(bad(format!(
                "{} coefficients for {} terms",
                a.coefficients.len(),
                basis.len()
            )));
        }
        let coefficients = a
            .coefficients
            .iter()
            .map(|c| R::parse_decimal(c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            system,
            basis,
            coefficients,
            energy: R::parse_decimal(&a.energy)?,
            metadata: a.metadata.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_archive()).expect("archive serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, AssemblyError> {
        let a: WavefunctionArchive =
            serde_json::from_str(text).map_err(|e| AssemblyError::Archive(e.to_string()))?;
        Self::from_archive(&a)
    }
}
