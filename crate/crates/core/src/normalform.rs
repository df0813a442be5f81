//! Order-by-order conjugation of a map to Birkhoff normal form, and the
//! synthesis of control terms that cancel the non-normalized remainder.
//!
//! Writing the map as `T_W` composed with the rotation, the normalizing
//! sequence `X` and the normalized sequence `Z` solve, order by order,
//!
//! ```text
//!     D X_1 + Z_1 = W_1,              D = R - 1,
//!     D X_s + Z_s = Psi_s,
//!     Psi_s = W_s + sum_{j<s} (j/s) (E^X_{s-j} W_j - E^Z_{s-j} R X_j),
//! ```
//!
//! the homological equation being diagonal on monomials in the complex
//! frame.  `Z_s` collects the kernel monomials (divisor modulus below the
//! resonance tolerance) and `X_s` the rest, divided by their eigenvalues.
//! Beyond the normalization order `r` the generators are left at zero and
//! the right members become the remainder `Q_s`.
//!
//! A control of base order `r` is the correction `F = {F_{r+1}, ...}` to `W`
//! that makes the remainder of the controlled map vanish:
//!
//! ```text
//!     F_s = -W~_s - sum_{j<s} (j/s) (E^X_{s-j} W~_j - E^Z_{s-j} R X_j),  s > r,
//! ```
//!
//! with `W~_j = W_j` for `j <= r` and `W_j + F_j` above, built in ascending
//! order so each `F_s` feeds the later ones.
//!
//! The solved sequence `X` is an operator-level object; the conjugating
//! point transformation from normalized to original coordinates is the
//! coordinate map of the transform with generators `R X_s` (see
//! [`NormalFormResult::transform_generators`]); a wrong pairing here is
//! caught by the numerical conjugacy oracle in the acceptance tests.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::VectorPoly;
use crate::lie::{lie_field, GeneratingSequence};
use crate::map::{MapRepresentation, PolyMap, RepresentationForm};
use crate::poly::{Frame, HomogeneousPoly};
use crate::rotation::RotationSpec;

/// How to treat monomials whose divisor is numerically resonant but not
/// forced to vanish by the monomial structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResonanceMode {
    /// Error out, naming the offending monomials.
    Strict,
    /// Keep them in `Z` (resonant normal form).
    Permissive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizeOptions {
    /// A monomial is resonant iff its divisor modulus is below this.
    pub resonance_tolerance: f64,
    /// Divisors in `[resonance_tolerance, near_resonance_tolerance)` are
    /// logged as near-resonance warnings.
    pub near_resonance_tolerance: f64,
    pub mode: ResonanceMode,
    /// Reuse `E`-terms across orders (results are identical either way;
    /// asserted in tests).
    pub reuse_e_terms: bool,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        NormalizeOptions {
            resonance_tolerance: 1e-10,
            near_resonance_tolerance: 1e-3,
            mode: ResonanceMode::Strict,
            reuse_e_terms: true,
        }
    }
}

/// A divisor seen while splitting one order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivisorEntry {
    pub exponents: Vec<u32>,
    pub component: usize,
    pub modulus: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NearResonance {
    pub order: usize,
    pub exponents: Vec<u32>,
    pub component: usize,
    pub modulus: f64,
}

/// Resonance bookkeeping accumulated over a normalization run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResonanceInfo {
    pub tolerance: f64,
    pub near_tolerance: f64,
    /// Integer vectors `k` with `|e^{i<k,omega>} - 1|` below tolerance that
    /// were met in kernel monomials not forced by structure.
    pub module_basis: Vec<Vec<i64>>,
    pub near_resonances: Vec<NearResonance>,
    /// Divisor moduli per processed degree.
    pub divisor_tables: BTreeMap<usize, Vec<DivisorEntry>>,
}

impl ResonanceInfo {
    fn new(tolerance: f64, near_tolerance: f64) -> Self {
        ResonanceInfo {
            tolerance,
            near_tolerance,
            module_basis: Vec::new(),
            near_resonances: Vec::new(),
            divisor_tables: BTreeMap::new(),
        }
    }

    /// Smallest non-kernel divisor used at a given degree.
    pub fn min_divisor_at_degree(&self, degree: usize) -> Option<f64> {
        self.divisor_tables.get(&degree).and_then(|entries| {
            entries
                .iter()
                .filter(|e| e.modulus >= self.tolerance)
                .map(|e| e.modulus)
                .min_by(f64::total_cmp)
        })
    }
}

/// Result of splitting one homogeneous order against `D = R - 1`.
pub struct HomologicalSplit {
    pub x: VectorPoly,
    pub z: VectorPoly,
    /// Kernel monomials that are not structurally resonant.
    pub accidental: Vec<(Vec<u32>, usize)>,
}

/// Solve `D X + Z = Psi` monomial by monomial in the complex frame.
pub fn solve_homological(
    rotation: &RotationSpec,
    psi: &VectorPoly,
    info: &mut ResonanceInfo,
) -> Result<HomologicalSplit> {
    if psi.frame() != Frame::Complex {
        return Err(Error::FrameMismatch { expected: Frame::Complex, got: psi.frame() });
    }
    let n = psi.n_dof();
    let degree = psi.degree();
    let order = degree.saturating_sub(1);
    let mut x_components = Vec::with_capacity(2 * n);
    let mut z_components = Vec::with_capacity(2 * n);
    let mut accidental = Vec::new();
    let table = info.divisor_tables.entry(degree).or_default();
    for (l, comp) in psi.components().iter().enumerate() {
        let mut x_terms: Vec<(Vec<u32>, Complex64)> = Vec::new();
        let mut z_terms: Vec<(Vec<u32>, Complex64)> = Vec::new();
        for (idx, &coeff) in comp.terms() {
            let eig = rotation.dw_eigenvalue(&idx.0, l);
            let modulus = eig.norm();
            table.push(DivisorEntry { exponents: idx.0.clone(), component: l, modulus });
            if modulus < info.tolerance {
                z_terms.push((idx.0.clone(), coeff));
                if !is_structural_kernel(n, &idx.0, l) {
                    accidental.push((idx.0.clone(), l));
                    if let Some(k) = resonant_module_vector(rotation, &idx.0, l) {
                        if !info.module_basis.contains(&k) {
                            info.module_basis.push(k);
                        }
                    }
                }
            } else {
                if modulus < info.near_tolerance {
                    info.near_resonances.push(NearResonance {
                        order,
                        exponents: idx.0.clone(),
                        component: l,
                        modulus,
                    });
                }
                x_terms.push((idx.0.clone(), coeff / eig));
            }
        }
        x_components.push(HomogeneousPoly::from_terms(n, degree, Frame::Complex, x_terms)?);
        z_components.push(HomogeneousPoly::from_terms(n, degree, Frame::Complex, z_terms)?);
    }
    Ok(HomologicalSplit {
        x: VectorPoly::from_components(x_components)?,
        z: VectorPoly::from_components(z_components)?,
        accidental,
    })
}

/// Probe frequencies used to decide whether a kernel monomial is resonant
/// for every `omega` (structural) or only for the one at hand.
fn probe_rotations(n: usize) -> [RotationSpec; 2] {
    let probe = |salt: f64| {
        RotationSpec::new((0..n).map(|l| 0.31 + salt * ((2 * l + 3) as f64).sqrt()).collect())
    };
    [probe(0.437), probe(0.911)]
}

fn is_structural_kernel(n: usize, exps: &[u32], component: usize) -> bool {
    probe_rotations(n)
        .iter()
        .all(|rot| rot.dw_eigenvalue(exps, component).norm() < 1e-9)
}

/// Integer vector of the resonance module met by a monomial: its divisor
/// phase is `<k, omega>` for the integer `k` recovered from the exponents
/// plus the component pairing (sign probed from the rotation action).
fn resonant_module_vector(
    rotation: &RotationSpec,
    exps: &[u32],
    component: usize,
) -> Option<Vec<i64>> {
    let n = rotation.n_dof();
    let mut k: Vec<i64> = (0..n).map(|l| exps[l + n] as i64 - exps[l] as i64).collect();
    let probe = probe_rotations(n);
    let l = component % n;
    let zero_exps = vec![0u32; 2 * n];
    let phase = (probe[0].dw_eigenvalue(&zero_exps, component) + Complex64::new(1.0, 0.0)).arg();
    k[l] += if phase > 0.0 { 1 } else { -1 };
    if k.iter().all(|&v| v == 0) {
        None
    } else {
        Some(k)
    }
}

/// Per-order norms and residuals recorded during normalization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderRecord {
    pub order: usize,
    pub norm_w: f64,
    pub norm_psi: f64,
    pub norm_x: f64,
    pub norm_z: f64,
    pub norm_q: f64,
    /// `|D X_s + Z_s - Psi_s|` relative to `|Psi_s|`.
    pub conjugation_residual: f64,
    /// `|D Z_s|` relative to `|Z_s|`.
    pub kernel_residual: f64,
    /// Smallest divisor modulus actually dividing an `X_s` coefficient.
    pub min_divisor: f64,
}

/// Output of [`normalize`]: the normalizing generators, the normalized part,
/// the remainder, and diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalFormResult {
    pub rotation: RotationSpec,
    pub order_r: usize,
    pub s_max: usize,
    /// Solved generators `X_1..X_r` (complex frame).
    pub x_seq: GeneratingSequence,
    /// Normalized part `Z_1..Z_r`.
    pub z_seq: GeneratingSequence,
    /// Remainder `Q_{r+1}..Q_{s_max}`.
    pub q_seq: GeneratingSequence,
    /// The input generators `W` the run consumed.
    pub w_seq: GeneratingSequence,
    pub records: Vec<OrderRecord>,
    pub resonance: ResonanceInfo,
}

impl NormalFormResult {
    /// The full conjugated sequence `{Z_1, ..., Z_r, Q_{r+1}, ...}`.
    pub fn full_z(&self) -> GeneratingSequence {
        let mut out = self.z_seq.clone();
        out.set_s_max(self.s_max);
        for (s, q) in self.q_seq.orders() {
            out.insert(s, q.clone()).expect("orders disjoint");
        }
        out
    }

    /// Generators of the point transformation from normalized to original
    /// coordinates: `R X_s`.
    pub fn transform_generators(&self) -> Result<GeneratingSequence> {
        self.x_seq.map_fields(|_, v| self.rotation.apply_field(v))
    }

    /// The truncated normalized map `T_Gamma` composed with the rotation.
    pub fn integrable_representation(&self) -> Result<MapRepresentation> {
        MapRepresentation::new(
            RepresentationForm::TransformThenRotation,
            self.rotation.clone(),
            self.z_seq.clone(),
        )
    }

    pub fn record(&self, s: usize) -> &OrderRecord {
        &self.records[s - 1]
    }
}

/// Run the conjugation to normal form: solve for `(X_s, Z_s)` up to order
/// `r`, then collect the remainder `Q_s` for `r < s <= s_max`.
pub fn normalize(
    rep: &MapRepresentation,
    r: usize,
    s_max: usize,
    opts: &NormalizeOptions,
) -> Result<NormalFormResult> {
    if r > s_max {
        return Err(Error::Invalid(format!("need r <= s_max, got r = {r}, s_max = {s_max}")));
    }
    let w = rep.w_generators()?;
    let rotation = rep.rotation().clone();
    let n = w.n_dof();
    let mut info = ResonanceInfo::new(opts.resonance_tolerance, opts.near_resonance_tolerance);

    let mut x_seq = GeneratingSequence::new(n, Frame::Complex, s_max);
    let mut z_full = GeneratingSequence::new(n, Frame::Complex, s_max);
    let mut z_seq = GeneratingSequence::new(n, Frame::Complex, s_max);
    let mut q_seq = GeneratingSequence::new(n, Frame::Complex, s_max);
    // Rotated solved generators R X_j, the targets of the E^Z terms.
    let mut rx: BTreeMap<usize, VectorPoly> = BTreeMap::new();
    // E-term tables: e_x_w[j][k] = E^X_k W_j, e_z_rx[j][k] = E^Z_k (R X_j).
    let mut e_x_w: BTreeMap<usize, Vec<VectorPoly>> = BTreeMap::new();
    let mut e_z_rx: BTreeMap<usize, Vec<VectorPoly>> = BTreeMap::new();

    let mut records = Vec::with_capacity(s_max);

    for s in 1..=s_max {
        let mut psi =
            w.get(s).cloned().unwrap_or_else(|| VectorPoly::zero(n, s + 1, Frame::Complex));
        for j in 1..s {
            let k = s - j;
            let factor = Complex64::new(j as f64 / s as f64, 0.0);
            let term_w = if opts.reuse_e_terms {
                cached_e_term(&mut e_x_w, &x_seq, w.get(j), j, k)
            } else {
                fresh_e_term(&x_seq, w.get(j), k)
            };
            if let Some(t) = term_w {
                psi = psi.add(&t.scale(factor))?;
            }
            let term_rx = if opts.reuse_e_terms {
                cached_e_term(&mut e_z_rx, &z_full, rx.get(&j), j, k)
            } else {
                fresh_e_term(&z_full, rx.get(&j), k)
            };
            if let Some(t) = term_rx {
                psi = psi.add(&t.scale(-factor))?;
            }
        }
        let norm_psi = psi.norm();
        let norm_w = w.get(s).map(VectorPoly::norm).unwrap_or(0.0);

        if s <= r {
            let split = solve_homological(&rotation, &psi, &mut info)?;
            if !split.accidental.is_empty() && opts.mode == ResonanceMode::Strict {
                return Err(Error::Resonance {
                    order: s,
                    monomials: split
                        .accidental
                        .iter()
                        .map(|(exps, l)| format!("{exps:?} e_{l}"))
                        .collect(),
                });
            }
            let rx_s = rotation.apply_field(&split.x)?;
            // Residual of D X_s + Z_s = Psi_s.
            let reconstructed = rx_s.sub(&split.x)?.add(&split.z)?;
            let conj_residual =
                reconstructed.sub(&psi)?.norm() / norm_psi.max(f64::MIN_POSITIVE);
            let dz = rotation.apply_field(&split.z)?.sub(&split.z)?;
            let kernel_residual = dz.norm() / split.z.norm().max(f64::MIN_POSITIVE);
            let min_divisor = info
                .min_divisor_at_degree(s + 1)
                .unwrap_or(f64::INFINITY);
            records.push(OrderRecord {
                order: s,
                norm_w,
                norm_psi,
                norm_x: split.x.norm(),
                norm_z: split.z.norm(),
                norm_q: 0.0,
                conjugation_residual: conj_residual,
                kernel_residual,
                min_divisor,
            });
            rx.insert(s, rx_s);
            if !split.z.is_zero() {
                z_seq.insert(s, split.z.clone())?;
                z_full.insert(s, split.z)?;
            }
            if !split.x.is_zero() {
                x_seq.insert(s, split.x)?;
            }
        } else {
            // Remainder order: X_s stays zero, Q_s is the right member.
            records.push(OrderRecord {
                order: s,
                norm_w,
                norm_psi,
                norm_x: 0.0,
                norm_z: 0.0,
                norm_q: norm_psi,
                conjugation_residual: 0.0,
                kernel_residual: 0.0,
                min_divisor: f64::INFINITY,
            });
            if !psi.is_zero() {
                q_seq.insert(s, psi.clone())?;
                z_full.insert(s, psi)?;
            }
        }
    }

    Ok(NormalFormResult {
        rotation,
        order_r: r,
        s_max,
        x_seq,
        z_seq,
        q_seq,
        w_seq: w,
        records,
        resonance: info,
    })
}

fn cached_e_term(
    table: &mut BTreeMap<usize, Vec<VectorPoly>>,
    seq: &GeneratingSequence,
    target: Option<&VectorPoly>,
    j: usize,
    k: usize,
) -> Option<VectorPoly> {
    let target = target?;
    if target.is_zero() {
        return None;
    }
    let terms = table.entry(j).or_insert_with(|| vec![target.clone()]);
    extend_e_terms(terms, seq, k);
    let t = &terms[k];
    (!t.is_zero()).then(|| t.clone())
}

fn fresh_e_term(
    seq: &GeneratingSequence,
    target: Option<&VectorPoly>,
    k: usize,
) -> Option<VectorPoly> {
    let target = target?;
    if target.is_zero() {
        return None;
    }
    let mut terms = vec![target.clone()];
    extend_e_terms(&mut terms, seq, k);
    let t = &terms[k];
    (!t.is_zero()).then(|| t.clone())
}

fn extend_e_terms(terms: &mut Vec<VectorPoly>, seq: &GeneratingSequence, upto: usize) {
    while terms.len() <= upto {
        let k = terms.len();
        let base_degree = terms[0].degree();
        let mut acc = VectorPoly::zero(terms[0].n_dof(), base_degree + k, terms[0].frame());
        for m in 1..=k {
            if let Some(xm) = seq.get(m) {
                let lower = &terms[k - m];
                if lower.is_zero() {
                    continue;
                }
                let term = lie_field(xm, lower).scale(Complex64::new(m as f64 / k as f64, 0.0));
                acc = acc.add(&term).expect("graded sum");
            }
        }
        assert_eq!(acc.degree(), base_degree + k, "E_k must raise the order by k");
        terms.push(acc);
    }
}

/// A synthesized control: corrections `F_{r+1}..F_{s_max}` to the map's
/// generating sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControlPlan {
    pub base_order: usize,
    pub s_max: usize,
    /// Entries only for orders `base_order < s <= s_max` (complex frame).
    pub f_seq: GeneratingSequence,
}

/// Build the control terms of base order `r` through order `s_max`.
pub fn synthesize_control(
    rep: &MapRepresentation,
    r: usize,
    s_max: usize,
    opts: &NormalizeOptions,
) -> Result<ControlPlan> {
    let nf = normalize(rep, r, r, opts)?;
    let w = rep.w_generators()?;
    let n = w.n_dof();
    let rotation = rep.rotation().clone();
    let mut w_tilde = w.clone();
    w_tilde.set_s_max(s_max);
    let mut f_seq = GeneratingSequence::new(n, Frame::Complex, s_max);

    let rx: BTreeMap<usize, VectorPoly> = nf
        .x_seq
        .orders()
        .map(|(s, x)| Ok((s, rotation.apply_field(x)?)))
        .collect::<Result<_>>()?;
    let mut e_x_wt: BTreeMap<usize, Vec<VectorPoly>> = BTreeMap::new();
    let mut e_z_rx: BTreeMap<usize, Vec<VectorPoly>> = BTreeMap::new();

    for s in r + 1..=s_max {
        let mut rhs = VectorPoly::zero(n, s + 1, Frame::Complex);
        for j in 1..s {
            let k = s - j;
            let factor = Complex64::new(j as f64 / s as f64, 0.0);
            if let Some(t) = cached_e_term(&mut e_x_wt, &nf.x_seq, w_tilde.get(j), j, k) {
                rhs = rhs.add(&t.scale(factor))?;
            }
            if let Some(t) = cached_e_term(&mut e_z_rx, &nf.z_seq, rx.get(&j), j, k) {
                rhs = rhs.add(&t.scale(-factor))?;
            }
        }
        let w_s =
            w.get(s).cloned().unwrap_or_else(|| VectorPoly::zero(n, s + 1, Frame::Complex));
        let f_s = w_s.add(&rhs)?.scale(Complex64::new(-1.0, 0.0));
        if !f_s.is_zero() {
            f_seq.insert(s, f_s.clone())?;
            w_tilde.insert(s, w_s.add(&f_s)?)?;
        }
    }
    Ok(ControlPlan { base_order: r, s_max, f_seq })
}

/// The controlled map: same rotation, generators `W + F`.
pub fn controlled_representation(
    rep: &MapRepresentation,
    plan: &ControlPlan,
) -> Result<MapRepresentation> {
    let w = rep.w_generators()?;
    let controlled = w.add(&plan.f_seq)?;
    MapRepresentation::new(
        RepresentationForm::TransformThenRotation,
        rep.rotation().clone(),
        controlled,
    )
}

/// Frequency-shift series of the integrable approximant: per degree of
/// freedom, coefficients of the action monomials `I^a` in `Delta omega_l`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwistData {
    pub shifts: Vec<BTreeMap<Vec<u32>, f64>>,
}

impl TwistData {
    /// Coefficient of `I_m` in `Delta omega_l`.
    pub fn linear_coefficient(&self, l: usize, m: usize) -> f64 {
        let n = self.shifts.len();
        let mut key = vec![0u32; n];
        key[m] = 1;
        self.shifts[l].get(&key).copied().unwrap_or(0.0)
    }
}

/// Realize the truncated normalized map `T_Gamma . R` as a polynomial map
/// (real frame) together with its twist data.
pub fn integrable_approximant(nf: &NormalFormResult, d_max: usize) -> Result<(PolyMap, TwistData)> {
    let rep = nf.integrable_representation()?;
    let map = crate::map::realize_map(&rep, d_max)?;
    let twist = twist_data(nf, d_max)?;
    Ok((map, twist))
}

/// Extract the action-dependent frequency shift from `T_Gamma xi_l`, which
/// for a normalized sequence is `xi_l . g_l(xi_1 eta_1, ..., xi_n eta_n)`;
/// the shift is `Delta omega_l = i log g_l` with `xi_m eta_m = -i I_m`.
fn twist_data(nf: &NormalFormResult, d_max: usize) -> Result<TwistData> {
    let n = nf.rotation.n_dof();
    let gamma = &nf.z_seq;
    let mut shifts = Vec::with_capacity(n);
    for l in 0..n {
        let xi_l = HomogeneousPoly::variable(n, Frame::Complex, l);
        let pieces = crate::lie::transform_apply(gamma, &xi_l, d_max.saturating_sub(1));
        let mut g: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        g.insert(vec![0; n], Complex64::new(1.0, 0.0));
        for piece in pieces.iter().skip(1) {
            if piece.is_zero() {
                continue;
            }
            for (idx, &coeff) in piece.terms() {
                let a = action_exponents(&idx.0, n, l).ok_or_else(|| {
                    Error::Invalid(format!(
                        "normalized transform produced non-kernel monomial {:?} on xi_{}",
                        idx.0, l
                    ))
                })?;
                *g.entry(a).or_insert(Complex64::new(0.0, 0.0)) += coeff;
            }
        }
        // Substitute w_m = -i I_m.
        let minus_i = Complex64::new(0.0, -1.0);
        let g_of_i: BTreeMap<Vec<u32>, Complex64> = g
            .into_iter()
            .map(|(a, c)| {
                let total: u32 = a.iter().sum();
                (a, c * minus_i.powu(total))
            })
            .collect();
        let log_g = series_log(&g_of_i, d_max.saturating_sub(1) / 2);
        let shift: BTreeMap<Vec<u32>, f64> = log_g
            .into_iter()
            .filter(|(a, _)| a.iter().any(|&v| v > 0))
            .map(|(a, c)| {
                let val = Complex64::new(0.0, 1.0) * c;
                debug_assert!(
                    val.im.abs() <= 1e-9 * val.norm().max(1.0),
                    "twist coefficient should be real, got {val}"
                );
                (a, val.re)
            })
            .collect();
        shifts.push(shift);
    }
    Ok(TwistData { shifts })
}

/// For a monomial `xi^j eta^k` in `T_Gamma xi_l`, the exponents `a` with
/// `xi^j eta^k = xi_l . prod_m (xi_m eta_m)^{a_m}`, if of that shape.
fn action_exponents(exps: &[u32], n: usize, l: usize) -> Option<Vec<u32>> {
    let mut a = Vec::with_capacity(n);
    for m in 0..n {
        let j = exps[m];
        let k = exps[m + n];
        let j_eff = if m == l { j.checked_sub(1)? } else { j };
        if j_eff != k {
            return None;
        }
        a.push(k);
    }
    Some(a)
}

/// Truncated log of a multivariate series with unit constant term.
fn series_log(
    g: &BTreeMap<Vec<u32>, Complex64>,
    max_total: usize,
) -> BTreeMap<Vec<u32>, Complex64> {
    let mut u: BTreeMap<Vec<u32>, Complex64> = g
        .iter()
        .filter(|(a, _)| a.iter().any(|&v| v > 0))
        .map(|(a, c)| (a.clone(), *c))
        .collect();
    truncate_series(&mut u, max_total);
    let mut result: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
    let mut power = u.clone();
    let mut m = 1usize;
    while !power.is_empty() && m <= max_total {
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        for (a, c) in &power {
            *result.entry(a.clone()).or_insert(Complex64::new(0.0, 0.0)) += c * sign / m as f64;
        }
        power = series_mul(&power, &u, max_total);
        m += 1;
    }
    result
}

fn series_mul(
    a: &BTreeMap<Vec<u32>, Complex64>,
    b: &BTreeMap<Vec<u32>, Complex64>,
    max_total: usize,
) -> BTreeMap<Vec<u32>, Complex64> {
    let mut out = BTreeMap::new();
    for (ka, ca) in a {
        for (kb, cb) in b {
            let k: Vec<u32> = ka.iter().zip(kb).map(|(x, y)| x + y).collect();
            if k.iter().map(|&v| v as usize).sum::<usize>() > max_total {
                continue;
            }
            *out.entry(k).or_insert(Complex64::new(0.0, 0.0)) += ca * cb;
        }
    }
    out
}

fn truncate_series(s: &mut BTreeMap<Vec<u32>, Complex64>, max_total: usize) {
    s.retain(|k, _| k.iter().map(|&v| v as usize).sum::<usize>() <= max_total);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{extract_generators, henon_map};
    use std::f64::consts::PI;

    fn golden() -> f64 {
        PI * (5f64.sqrt() - 1.0)
    }

    fn henon_rep(omega: f64, s_max: usize) -> MapRepresentation {
        extract_generators(&henon_map(omega), s_max).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn degree_two_has_empty_kernel() {
        // Psi = W_1 of the Henon map: kernel monomials have odd degree, so
        // Z_1 = 0 by parity.
        let rep = henon_rep(golden(), 4);
        let w = rep.w_generators().unwrap();
        let mut info = ResonanceInfo::new(1e-10, 1e-3);
        let split = solve_homological(rep.rotation(), w.get(1).unwrap(), &mut info).unwrap();
        assert!(split.z.is_zero());
        assert!(split.accidental.is_empty());
        // Reconstruction D X = Psi.
        let rot = rep.rotation();
        let recon = rot.apply_field(&split.x).unwrap().sub(&split.x).unwrap();
        let diff = recon.sub(w.get(1).unwrap()).unwrap();
        assert!(diff.norm() < 1e-13 * w.get(1).unwrap().norm());
    }

    #[test]
    fn kernel_input_passes_through() {
        // Psi entirely in the kernel: X = 0, Z = Psi.
        let rot = RotationSpec::new(vec![golden()]);
        let psi = VectorPoly::from_components(vec![
            HomogeneousPoly::monomial(1, Frame::Complex, vec![2, 1], c(1.0, -0.5)),
            HomogeneousPoly::monomial(1, Frame::Complex, vec![1, 2], c(-1.0, 0.5)),
        ])
        .unwrap();
        let mut info = ResonanceInfo::new(1e-10, 1e-3);
        let split = solve_homological(&rot, &psi, &mut info).unwrap();
        assert!(split.x.is_zero());
        assert_eq!(split.z, psi);
        assert!(split.accidental.is_empty());
    }

    #[test]
    fn random_degree_three_residual() {
        let rot = RotationSpec::new(vec![golden()]);
        let psi = VectorPoly::from_components(vec![
            HomogeneousPoly::from_terms(
                1,
                3,
                Frame::Complex,
                [
                    (vec![3, 0], c(0.7, 0.1)),
                    (vec![2, 1], c(-0.2, 0.9)),
                    (vec![0, 3], c(0.4, -0.4)),
                ],
            )
            .unwrap(),
            HomogeneousPoly::from_terms(
                1,
                3,
                Frame::Complex,
                [(vec![1, 2], c(1.1, 0.0)), (vec![3, 0], c(0.0, -0.6))],
            )
            .unwrap(),
        ])
        .unwrap();
        let mut info = ResonanceInfo::new(1e-10, 1e-3);
        let split = solve_homological(&rot, &psi, &mut info).unwrap();
        let recon = rot
            .apply_field(&split.x)
            .unwrap()
            .sub(&split.x)
            .unwrap()
            .add(&split.z)
            .unwrap();
        let diff = recon.sub(&psi).unwrap();
        assert!(diff.norm() <= 1e-13 * psi.norm());
    }

    #[test]
    fn henon_normalization_small_order() {
        let rep = henon_rep(golden(), 8);
        let nf = normalize(&rep, 8, 8, &NormalizeOptions::default()).unwrap();
        // Odd orders have empty kernel at n = 1.
        for s in (1..=8).step_by(2) {
            assert!(nf.z_seq.get(s).is_none(), "Z_{s} must vanish by parity");
        }
        assert!(nf.z_seq.get(2).is_some());
        assert!(nf.z_seq.get(4).is_some());
        for rec in &nf.records {
            assert!(rec.conjugation_residual < 1e-13);
            assert!(rec.kernel_residual < 1e-12);
        }
    }

    #[test]
    fn normalized_part_is_symplectic() {
        let rep = henon_rep(golden(), 8);
        let nf = normalize(&rep, 8, 8, &NormalizeOptions::default()).unwrap();
        for (_, z) in nf.z_seq.orders() {
            assert!(z.symplecticity_check(1e-10).hamiltonian);
        }
        for (_, x) in nf.x_seq.orders() {
            assert!(x.symplecticity_check(1e-10).hamiltonian);
        }
    }

    #[test]
    fn caching_on_off_identical() {
        let rep = henon_rep(golden(), 10);
        let on = normalize(&rep, 6, 10, &NormalizeOptions::default()).unwrap();
        let off = normalize(
            &rep,
            6,
            10,
            &NormalizeOptions { reuse_e_terms: false, ..Default::default() },
        )
        .unwrap();
        assert_eq!(on.x_seq, off.x_seq);
        assert_eq!(on.z_seq, off.z_seq);
        assert_eq!(on.q_seq, off.q_seq);
    }

    #[test]
    fn scaling_covariance() {
        // W_1 -> lambda W_1 rescales X_s and Z_s by lambda^s.
        let rep = henon_rep(golden(), 6);
        let nf = normalize(&rep, 6, 6, &NormalizeOptions::default()).unwrap();
        let lambda = 0.5;
        let scaled =
            rep.generators().map_fields(|_, v| Ok(v.scale(c(lambda, 0.0)))).unwrap();
        let rep2 = MapRepresentation::new(
            RepresentationForm::RotationThenTransform,
            rep.rotation().clone(),
            scaled,
        )
        .unwrap();
        let nf2 = normalize(&rep2, 6, 6, &NormalizeOptions::default()).unwrap();
        for s in 1..=6 {
            let factor = lambda.powi(s as i32);
            let (a, b) = (nf.record(s).norm_x, nf2.record(s).norm_x);
            if a > 0.0 {
                assert!(
                    ((b / (a * factor)) - 1.0).abs() < 1e-10,
                    "X_{s}: {b} vs {a} * {factor}"
                );
            }
            let (az, bz) = (nf.record(s).norm_z, nf2.record(s).norm_z);
            if az > 0.0 {
                assert!(((bz / (az * factor)) - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn strict_mode_rejects_resonant_frequency() {
        // omega = 2 pi / 5 is resonant: kernel-adjacent monomials that are
        // not structural show up by order 6 and cannot be divided.
        let rep = henon_rep(2.0 * PI / 5.0, 6);
        let err = normalize(&rep, 6, 6, &NormalizeOptions::default());
        match err {
            Err(Error::Resonance { order, ref monomials }) => {
                assert!(order <= 6);
                assert!(!monomials.is_empty());
            }
            other => panic!("expected resonance error, got {other:?}"),
        }
        // Permissive mode absorbs them into Z.
        let nf = normalize(
            &rep,
            6,
            6,
            &NormalizeOptions { mode: ResonanceMode::Permissive, ..Default::default() },
        )
        .unwrap();
        assert!(!nf.resonance.module_basis.is_empty());
    }

    #[test]
    fn control_one_step_expansion() {
        // r = 1, s = 2:  F_2 = -W_2 - 1/2 (L_{X_1} W_1 - L_{Z_1} R X_1).
        let rep = henon_rep(golden(), 4);
        let opts = NormalizeOptions::default();
        let plan = synthesize_control(&rep, 1, 2, &opts).unwrap();
        let nf = normalize(&rep, 1, 1, &opts).unwrap();
        let w = rep.w_generators().unwrap();
        let x1 = nf.x_seq.get(1).unwrap();
        let rx1 = rep.rotation().apply_field(x1).unwrap();
        let mut expect = lie_field(x1, w.get(1).unwrap());
        if let Some(z1) = nf.z_seq.get(1) {
            expect = expect.sub(&lie_field(z1, &rx1)).unwrap();
        }
        let expect = expect.scale(c(-0.5, 0.0));
        // W_2 = 0 for the Henon map.
        let diff = plan.f_seq.get(2).unwrap().sub(&expect).unwrap();
        assert!(diff.norm() < 1e-12 * expect.norm());
    }

    #[test]
    fn empty_plan_when_s_max_equals_r() {
        let rep = henon_rep(golden(), 4);
        let plan = synthesize_control(&rep, 2, 2, &NormalizeOptions::default()).unwrap();
        assert!(plan.f_seq.is_empty());
    }

    #[test]
    fn control_cancels_remainder() {
        let rep = henon_rep(golden(), 6);
        let opts = NormalizeOptions::default();
        let plan = synthesize_control(&rep, 1, 6, &opts).unwrap();
        let controlled = controlled_representation(&rep, &plan).unwrap();
        let nf = normalize(&controlled, 1, 6, &opts).unwrap();
        let w1 = nf.record(1).norm_w;
        for s in 2..=6 {
            assert!(
                nf.record(s).norm_q <= 1e-10 * w1.max(1.0),
                "Q_{s} = {}",
                nf.record(s).norm_q
            );
        }
    }

    #[test]
    fn controlled_map_keeps_low_order_normal_form() {
        let rep = henon_rep(golden(), 5);
        let opts = NormalizeOptions::default();
        let plan = synthesize_control(&rep, 2, 5, &opts).unwrap();
        let controlled = controlled_representation(&rep, &plan).unwrap();
        let nf_plain = normalize(&rep, 2, 2, &opts).unwrap();
        let nf_ctrl = normalize(&controlled, 2, 5, &opts).unwrap();
        for s in 1..=2 {
            match (nf_plain.x_seq.get(s), nf_ctrl.x_seq.get(s)) {
                (Some(a), Some(b)) => {
                    assert!(a.sub(b).unwrap().norm() < 1e-12 * a.norm().max(1.0))
                }
                (None, None) => {}
                _ => panic!("X_{s} differs between plain and controlled runs"),
            }
        }
    }

    #[test]
    fn r_zero_gives_pure_rotation_approximant() {
        let rep = henon_rep(golden(), 4);
        let nf = normalize(&rep, 0, 4, &NormalizeOptions::default()).unwrap();
        let (map, twist) = integrable_approximant(&nf, 5).unwrap();
        for d in 2..=5 {
            assert!(map.piece(d).is_zero());
        }
        assert!(twist.shifts[0].is_empty());
    }

    #[test]
    fn approximant_preserves_action_along_orbit() {
        let rep = henon_rep(golden(), 8);
        let nf = normalize(&rep, 8, 8, &NormalizeOptions::default()).unwrap();
        let (map, twist) = integrable_approximant(&nf, 9).unwrap();
        let mut z = vec![c(0.05, 0.0), c(0.02, 0.0)];
        let i0 = (z[0].norm_sqr() + z[1].norm_sqr()) / 2.0;
        for _ in 0..50 {
            z = map.eval(&z);
        }
        let i1 = (z[0].norm_sqr() + z[1].norm_sqr()) / 2.0;
        assert!((i1 - i0).abs() < 1e-10, "drift {}", (i1 - i0).abs());
        assert!(twist.linear_coefficient(0, 0).abs() > 1e-6);
    }

    #[test]
    fn twist_matches_numerical_rotation_number() {
        let rep = henon_rep(golden(), 6);
        let nf = normalize(&rep, 6, 6, &NormalizeOptions::default()).unwrap();
        let (map, twist) = integrable_approximant(&nf, 7).unwrap();
        let t1 = twist.linear_coefficient(0, 0);
        // Rotation angle of the approximant at small amplitude, linear
        // response extracted by eliminating the quadratic term.
        let measure = |amp: f64| -> f64 {
            let z = [c(amp, 0.0), c(0.0, 0.0)];
            let zeta0 = crate::frame::point_to_complex(&[amp, 0.0]);
            let w = map.eval(&z);
            let zeta1 = crate::frame::point_to_complex(&[w[0].re, w[1].re]);
            let ratio = zeta1[0] / zeta0[0];
            // xi' = e^{-i(omega + shift)} xi.
            let mut shift = -(ratio.arg()) - golden();
            while shift > PI {
                shift -= 2.0 * PI;
            }
            while shift < -PI {
                shift += 2.0 * PI;
            }
            shift
        };
        let amp = 0.05;
        let i_full = amp * amp / 2.0;
        let d_full = measure(amp);
        let d_half = measure(amp / 2f64.sqrt());
        let t1_num = (4.0 * d_half - d_full) / i_full;
        assert!(
            (t1_num - t1).abs() < 1e-3 * t1.abs().max(1.0),
            "algebraic {t1} vs numerical {t1_num}"
        );
    }

    #[test]
    fn normal_form_kills_action_derivatives() {
        // E_s^Z I = 0 for s = 1..r.
        let rep = henon_rep(golden(), 8);
        let nf = normalize(&rep, 8, 8, &NormalizeOptions::default()).unwrap();
        let action =
            HomogeneousPoly::from_terms(1, 2, Frame::Complex, [(vec![1, 1], c(0.0, 1.0))])
                .unwrap();
        for s in 1..=8 {
            let es = crate::lie::e_apply(&nf.z_seq, s, &action);
            assert!(es.norm() < 1e-12, "E_{s}^Z I = {}", es.norm());
        }
    }
}
