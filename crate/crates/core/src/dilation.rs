//! Truncated minimal dilations of positive kernels.
//!
//! The pre-Hilbert space is spanned by `δ_{(q, α_q(c))} ⊗ h` for the index
//! catalog at bound `D`; the Gram matrix of the kernel factors as `B*B` and
//! `K_D = range(B)`. Operators defined on indices by an index matrix `M`
//! descend to `B M B^+`. The isometry `V(p)` moves an index `(q, c)` to
//! `(pq, c)`, which stays inside the catalog only for `|q| ≤ D − |p|`, so
//! `V(p)` is computed on the interior subspace spanned by that smaller
//! catalog and set to zero on its orthogonal complement.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::check::{Check, Worst};
use crate::cpmaps::{phi_f, CovariantPair};
use crate::cstar::{LcmSystem, LevelledElement, Model};
use crate::error::{Error, Result};
use crate::kernel::{assemble_gram_on, IndexCatalog, Kernel, PairKernel};
use crate::linalg::{c, hermitian_eigen, mul, op_norm, range_and_pinv, CMat, C64};
use crate::semigroup::{Element, RightLcmSemigroup, DEFAULT_ENUMERATION_CAP};

/// Numerical tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative bound on negative eigenvalues, scaled by `max(λ_max, 1)`.
    pub psd: f64,
    /// Relative cut below which Gram eigenvalues count as zero.
    pub rank: f64,
    /// Absolute bound on verification residuals.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            psd: 1e-8,
            rank: 1e-10,
            residual: 1e-8,
        }
    }
}

/// Matrix attached to a semigroup element.
#[derive(Clone, Debug, PartialEq)]
pub struct WordMatrix {
    pub word: Element,
    pub matrix: CMat,
}

/// A truncated dilation `(π, V)` on `K_D` together with its verification.
#[derive(Clone, Debug)]
pub struct DilationResult {
    pub depth: usize,
    pub h: usize,
    /// `dim K_D`.
    pub dim: usize,
    /// Gram eigenvalues, ascending.
    pub spectrum: Vec<f64>,
    /// Isometric embedding `J : C^h → K_D`.
    pub embedding: CMat,
    /// `π` of each basis element of the depth-`D` algebra.
    pub representation: Vec<CMat>,
    /// `V(p)` for every `|p| ≤ D`, exact on `interiors[|p|]`, zero on its complement.
    pub isometries: Vec<WordMatrix>,
    /// Orthonormal bases of the interior subspaces, indexed by word length.
    pub interiors: Vec<CMat>,
    pub report: Vec<Check>,
}

impl DilationResult {
    pub fn isometry(&self, p: &Element) -> Option<&CMat> {
        self.isometries
            .iter()
            .find(|w| w.word == *p)
            .map(|w| &w.matrix)
    }

    pub fn interior(&self, len: usize) -> &CMat {
        &self.interiors[len.min(self.interiors.len() - 1)]
    }

    /// `π(x)` for `x` of depth at most `D`.
    pub fn pi(&self, sys: &LcmSystem, x: &LevelledElement) -> Result<CMat> {
        let d = sys.depth(self.depth);
        if x.depth > d {
            return Err(Error::Invalid(format!(
                "element of depth {} is beyond the dilation depth {d}",
                x.depth
            )));
        }
        let coords = sys.coords(&sys.refine(x, d));
        let mut out = CMat::zeros(self.dim, self.dim);
        for (z, m) in coords.iter().zip(&self.representation) {
            if *z != c(0.0) {
                out += m * *z;
            }
        }
        Ok(out)
    }

    pub fn passed(&self) -> bool {
        self.report.iter().all(|c| c.passed)
    }
}

/// Interior length on which `V(p)` is exact: the number of generator factors
/// for `N^m` (so products of generators stay valid), the word length otherwise.
pub fn span_length(sys: &LcmSystem, p: &Element) -> usize {
    match sys.model() {
        Model::ToeplitzAbelian => p.0.iter().map(|&n| n as usize).sum(),
        _ => sys.semigroup().length(p),
    }
}

struct Interior {
    /// `B R_ℓ`: images of the smaller catalog's indices.
    image: CMat,
    basis: CMat,
    pinv: CMat,
    catalog: IndexCatalog,
}

struct Engine<'a, K: Kernel + ?Sized> {
    k: &'a K,
    sys: &'a LcmSystem,
    h: usize,
    depth: usize,
    tol: Tolerances,
    catalog: IndexCatalog,
    b: CMat,
    bplus: CMat,
    /// Columns of `U` beyond the kept ones span the discarded directions.
    discarded: CMat,
    interiors: Vec<Interior>,
}

/// Outcome of a failed positivity test on the Gram matrix.
fn negative_witness(
    catalog: &IndexCatalog,
    sys: &LcmSystem,
    h: usize,
    v: &[C64],
) -> Vec<(String, f64)> {
    let mut weights: Vec<(usize, f64)> = (0..catalog.len())
        .map(|i| {
            let w = (0..h).map(|k| v[i * h + k].norm_sqr()).sum::<f64>().sqrt();
            (i, w)
        })
        .collect();
    weights.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    weights
        .into_iter()
        .take(6)
        .filter(|w| w.1 > 1e-6)
        .map(|(i, w)| (catalog.label(sys, i), w))
        .collect()
}

impl<'a, K: Kernel + ?Sized> Engine<'a, K> {
    fn build(
        k: &'a K,
        catalog: IndexCatalog,
        depth: usize,
        tol: Tolerances,
        max_dim: usize,
        report: &mut Vec<Check>,
    ) -> Result<(Self, Vec<f64>)> {
        let sys = k.system();
        let h = k.h();
        let gram = assemble_gram_on(k, catalog, max_dim)?;
        let (vals, vecs) = hermitian_eigen(&gram.matrix);
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(
                "Gram eigendecomposition did not converge".into(),
            ));
        }
        let lambda_max = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let scale = lambda_max.max(1.0);
        report.push(Check::at_most(
            "Gram matrix Hermitian",
            gram.hermitian_residual / scale,
            tol.residual,
        ));
        let min = vals.first().copied().unwrap_or(0.0);
        if min < -tol.psd * scale {
            let v: Vec<C64> = vecs.column(0).iter().copied().collect();
            return Err(Error::NotPositive {
                min_eigenvalue: min,
                lambda_max,
                witness: negative_witness(&gram.catalog, sys, h, &v),
            });
        }
        let cut = tol.rank * lambda_max;
        let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > cut).collect();
        let drop: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] <= cut).collect();
        let n = gram.matrix.nrows();
        let mut b = CMat::zeros(keep.len(), n);
        let mut bplus = CMat::zeros(n, keep.len());
        for (row, &i) in keep.iter().enumerate() {
            let u = vecs.column(i);
            let s = vals[i].sqrt();
            b.set_row(row, &(u.adjoint() * c(s)));
            bplus.set_column(row, &(u * c(1.0 / s)));
        }
        let mut discarded = CMat::zeros(n, drop.len());
        for (col, &i) in drop.iter().enumerate() {
            discarded.set_column(col, &vecs.column(i));
        }
        let fact = op_norm(&(&gram.matrix - mul(&b.adjoint(), &b)));
        report.push(Check::at_most(
            "Gram factorization ‖G − B*B‖/λ_max",
            fact / scale,
            tol.psd,
        ));
        let mut engine = Engine {
            k,
            sys,
            h,
            depth,
            tol,
            catalog: gram.catalog,
            b,
            bplus,
            discarded,
            interiors: Vec::new(),
        };
        for len in 0..=depth {
            let inner = engine.interior(len)?;
            engine.interiors.push(inner);
        }
        Ok((engine, vals))
    }

    fn r(&self) -> usize {
        self.b.nrows()
    }

    fn nh(&self) -> usize {
        self.catalog.len() * self.h
    }

    /// Column `col` of an index matrix gets `coords ⊗ op` placed at `word`.
    fn place(
        &self,
        m: &mut CMat,
        col: usize,
        word: &Element,
        coords: &[C64],
        op: Option<&CMat>,
    ) -> Result<()> {
        let h = self.h;
        for (j, z) in coords.iter().enumerate() {
            if *z == c(0.0) {
                continue;
            }
            let row = self.catalog.position(word, j).ok_or_else(|| {
                Error::Invalid(format!("index ({word}, {j}) is outside the catalog"))
            })?;
            let mut blk = m.view_mut((row * h, col * h), (h, h));
            match op {
                Some(t) => blk += t * *z,
                None => {
                    for k in 0..h {
                        blk[(k, k)] += *z;
                    }
                }
            }
        }
        Ok(())
    }

    /// Coordinates of `x` at the depth the catalog assigns to `word`.
    fn coords_at(&self, word: &Element, x: &LevelledElement) -> Result<Vec<C64>> {
        let d = self
            .catalog
            .depth_of(word)
            .ok_or_else(|| Error::Invalid(format!("word {word} is outside the catalog")))?;
        if x.depth > d {
            return Err(Error::Invalid(format!(
                "element of depth {} does not fit index depth {d} of {word}",
                x.depth
            )));
        }
        Ok(self.sys.coords(&self.sys.refine(x, d)))
    }

    /// Embeds the catalog at bound `D − len` into the top catalog.
    fn interior(&self, len: usize) -> Result<Interior> {
        let sys = self.sys;
        let h = self.h;
        let small = IndexCatalog::new(sys, self.depth - len)?;
        let mut r = CMat::zeros(self.nh(), small.len() * h);
        for (col, e) in small.entries.iter().enumerate() {
            let coords = self.coords_at(&e.word, &sys.basis_element(e.depth, e.basis))?;
            self.place(&mut r, col, &e.word, &coords, None)?;
        }
        let image = mul(&self.b, &r);
        let (basis, pinv) = range_and_pinv(&image, self.tol.rank);
        Ok(Interior {
            image,
            basis,
            pinv,
            catalog: small,
        })
    }

    /// `B M B^+` and the relative well-definedness residual `‖B M P_null‖`.
    fn descend(&self, m: &CMat) -> (CMat, f64) {
        let bm = mul(&self.b, m);
        let op = mul(&bm, &self.bplus);
        let leak = op_norm(&mul(&bm, &self.discarded));
        let scale = op_norm(&self.b).powi(2).max(1.0);
        (op, leak / scale)
    }

    fn pi(&self, a: &LevelledElement) -> Result<(CMat, f64)> {
        let sys = self.sys;
        let mut m = CMat::zeros(self.nh(), self.nh());
        for (col, e) in self.catalog.entries.iter().enumerate() {
            let x = sys.alpha_inverse(&e.word, a)?;
            let y = sys.mul(&x, &sys.basis_element(e.depth, e.basis));
            let coords = self.coords_at(&e.word, &y)?;
            self.place(&mut m, col, &e.word, &coords, None)?;
        }
        Ok(self.descend(&m))
    }

    fn embedding(&self) -> Result<CMat> {
        let sys = self.sys;
        let e = sys.semigroup().identity();
        let mut m = CMat::zeros(self.nh(), self.h);
        let coords = self.coords_at(&e, &sys.unit(0))?;
        for (j, z) in coords.iter().enumerate() {
            if *z == c(0.0) {
                continue;
            }
            let row = self
                .catalog
                .position(&e, j)
                .ok_or_else(|| Error::Invalid("identity index missing".into()))?;
            for k in 0..self.h {
                m[(row * self.h + k, k)] += *z;
            }
        }
        Ok(mul(&self.b, &m))
    }

    /// `V(p)` on the interior of length `|p|`, zero on its complement.
    fn isometry(&self, p: &Element) -> Result<(CMat, f64)> {
        let sys = self.sys;
        let s = sys.semigroup();
        let inner = &self.interiors[span_length(sys, p).min(self.depth)];
        let mut shift = CMat::zeros(self.nh(), inner.catalog.len() * self.h);
        for (col, e) in inner.catalog.entries.iter().enumerate() {
            let target = s.multiply(p, &e.word)?;
            let coords = self.coords_at(&target, &sys.basis_element(e.depth, e.basis))?;
            self.place(&mut shift, col, &target, &coords, None)?;
        }
        let bs = mul(&self.b, &shift);
        let v = mul(&bs, &inner.pinv);
        let leak = op_norm(&(&bs - mul(&v, &inner.image))) / op_norm(&bs).max(1.0);
        Ok((v, leak))
    }

    /// `V(p)*` from the index formula
    /// `δ_{q, α_q(c)} ⊗ h ↦ δ_{p^{-1}r, α_{p^{-1}r}(α_{(q^{-1}r)^{-1}}(c))} ⊗ T(q^{-1}r)* h`.
    fn adjoint_by_formula(&self, p: &Element) -> Result<(CMat, f64)> {
        let sys = self.sys;
        let s = sys.semigroup();
        let mut m = CMat::zeros(self.nh(), self.nh());
        let mut tcache: HashMap<Element, CMat> = HashMap::new();
        for (col, e) in self.catalog.entries.iter().enumerate() {
            let Some(r) = s.lcm(p, &e.word)? else {
                continue;
            };
            let target = s.left_divide(p, &r)?.expect("p divides lcm");
            let rest = s.left_divide(&e.word, &r)?.expect("q divides lcm");
            let y = sys.alpha_inverse(&rest, &sys.basis_element(e.depth, e.basis))?;
            if !tcache.contains_key(&rest) {
                let t = contraction(self.k, &rest)?;
                tcache.insert(rest.clone(), t.adjoint());
            }
            let coords = self.coords_at(&target, &y)?;
            self.place(&mut m, col, &target, &coords, Some(&tcache[&rest]))?;
        }
        Ok(self.descend(&m))
    }
}

/// `T(p)` recovered from a kernel as `K(e, E_p, p)`.
pub fn contraction<K: Kernel + ?Sized>(k: &K, p: &Element) -> Result<CMat> {
    let sys = k.system();
    let e = sys.semigroup().identity();
    k.evaluate_unchecked(&e, &sys.range_projection(p)?, p)
}

fn build_result<K: Kernel + ?Sized>(
    k: &K,
    catalog: IndexCatalog,
    depth: usize,
    tol: Tolerances,
    max_dim: usize,
    with_adjoint_formula: bool,
) -> Result<DilationResult> {
    let sys = k.system();
    if sys.has_stage_maps() {
        return Err(Error::Unsupported {
            what: "dilation".into(),
            reason: "generator maps must be endomorphisms".into(),
        });
    }
    let mut report = Vec::new();
    let (engine, spectrum) = Engine::build(k, catalog, depth, tol, max_dim, &mut report)?;
    let d = sys.depth(depth);
    let mut pi_leak = Worst::default();
    let mut representation = Vec::with_capacity(sys.dim(d));
    for i in 0..sys.dim(d) {
        let (m, leak) = engine.pi(&sys.basis_element(d, i))?;
        pi_leak.see(leak, || format!("π({})", sys.describe_basis(d, i)));
        representation.push(m);
    }
    report.push(pi_leak.check("π well defined on the quotient", tol.residual));
    let words = sys
        .semigroup()
        .enumerate_up_to(depth, DEFAULT_ENUMERATION_CAP)?;
    let mut v_leak = Worst::default();
    let mut isometries = Vec::with_capacity(words.len());
    for p in &words {
        let (m, leak) = engine.isometry(p)?;
        v_leak.see(leak, || format!("V{p}"));
        isometries.push(WordMatrix {
            word: p.clone(),
            matrix: m,
        });
    }
    report.push(v_leak.check("V well defined on the quotient", tol.residual));
    let embedding = engine.embedding()?;
    let interiors: Vec<CMat> = engine.interiors.iter().map(|i| i.basis.clone()).collect();
    let result = DilationResult {
        depth,
        h: engine.h,
        dim: engine.r(),
        spectrum,
        embedding,
        representation,
        isometries,
        interiors,
        report,
    };
    let mut result = result;
    if with_adjoint_formula {
        let mut formula = Worst::default();
        let mut leak = Worst::default();
        for p in &words {
            let (adj, l) = engine.adjoint_by_formula(p)?;
            leak.see(l, || format!("V{p}*"));
            let q = result.interior(span_length(sys, p));
            let v = result.isometry(p).expect("all words up to depth");
            formula.see_norm(&mul(&(adj - v.adjoint()), q), || format!("p={p}"));
        }
        result
            .report
            .push(leak.check("V* index formula well defined", tol.residual));
        result
            .report
            .push(formula.check("V(p)* agrees with the index formula", tol.residual));
    }
    Ok(result)
}

/// Minimal dilation of a positive kernel at bound `depth`, with the
/// kernel-level identities verified.
pub fn naimark_dilate<K: Kernel + ?Sized>(
    k: &K,
    depth: usize,
    tol: Tolerances,
    max_dim: usize,
) -> Result<DilationResult> {
    let catalog = IndexCatalog::new(k.system(), depth)?;
    let mut result = build_result(k, catalog, depth, tol, max_dim, true)?;
    let checks = verify_dilation(&result, k, tol, 0)?;
    result.report.extend(checks);
    Ok(result)
}

/// Covariant dilation of a pair: requires `φ̃` completely positive at the
/// requested depth, then builds and verifies `(π, V)`.
pub fn covariant_dilate(
    pair: &CovariantPair,
    depth: usize,
    tol: Tolerances,
    max_dim: usize,
) -> Result<DilationResult> {
    let lifted = pair.lifted_map(depth)?;
    let verdict = lifted.complete_positivity(tol.psd);
    if !verdict.completely_positive {
        return Err(Error::NotCompletelyPositive {
            min_eigenvalue: verdict.min_eigenvalue,
            block: verdict.witness.map_or(0, |w| w.0),
        });
    }
    let kernel = PairKernel::new(pair.clone());
    let mut result = naimark_dilate(&kernel, depth, tol, max_dim)?;
    result.report.insert(
        0,
        Check::at_least(
            "φ̃ completely positive at depth (Choi eigenvalue)",
            verdict.min_eigenvalue,
            -tol.psd * verdict.scale,
        ),
    );
    Ok(result)
}

/// Identities that only need the stored matrices: embedding, `π` a unital
/// *-homomorphism, `V` isometric and covariant on interiors, compressions,
/// co-invariance of `H`, Nica covariance, products of generators and
/// reproduction of the kernel. `seed` drives the sampling of basis pairs.
pub fn verify_dilation<K: Kernel + ?Sized>(
    res: &DilationResult,
    k: &K,
    tol: Tolerances,
    seed: u64,
) -> Result<Vec<Check>> {
    let sys = k.system();
    let s = sys.semigroup();
    let h = k.h();
    let depth = res.depth;
    let d = sys.depth(depth);
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = s.enumerate_up_to(depth, DEFAULT_ENUMERATION_CAP)?;
    if res.representation.len() != sys.dim(d) || res.isometries.len() != words.len() {
        return Err(Error::Invalid(
            "dilation result does not match the system at its depth".into(),
        ));
    }
    let j = &res.embedding;
    let id_h = CMat::identity(h, h);
    let id_k = CMat::identity(res.dim, res.dim);
    let v = |p: &Element| res.isometry(p).expect("all words up to depth");

    checks.push(Check::at_most(
        "embedding isometric ‖J*J − I‖",
        op_norm(&(j.adjoint() * j - &id_h)),
        tol.residual,
    ));
    checks.push(Check::at_most(
        "π unital",
        op_norm(&(res.pi(sys, &sys.unit(0))? - &id_k)),
        tol.residual,
    ));

    let n = res.representation.len();
    let pairs: Vec<(usize, usize)> = if n * n <= 1024 {
        (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect()
    } else {
        (0..1024)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
            .collect()
    };
    let mut mult = Worst::default();
    for &(a, b) in &pairs {
        let x = sys.basis_element(d, a);
        let y = sys.basis_element(d, b);
        let lhs = mul(&res.representation[a], &res.representation[b]);
        let rhs = res.pi(sys, &sys.mul(&x, &y))?;
        mult.see_norm(&(lhs - rhs), || {
            format!(
                "{} · {}",
                sys.describe_basis(d, a),
                sys.describe_basis(d, b)
            )
        });
    }
    checks.push(mult.check("π multiplicative", tol.residual));
    let mut star = Worst::default();
    for a in 0..n {
        let x = sys.adjoint(&sys.basis_element(d, a));
        let r = op_norm(&(res.pi(sys, &x)? - res.representation[a].adjoint()));
        star.see(r, || sys.describe_basis(d, a));
    }
    checks.push(star.check("π *-preserving", tol.residual));

    let mut iso = Worst::default();
    let mut inter = Worst::default();
    let mut ranges = Vec::new();
    let mut range = Worst::default();
    let mut comp_v = Worst::default();
    let mut coinv = Worst::default();
    for p in &words {
        let len = span_length(sys, p);
        let q = res.interior(len);
        let vp = v(p);
        let vq = mul(vp, q);
        iso.see_norm(&(mul(&vp.adjoint(), &vq) - q), || format!("p={p}"));
        let ep = sys.range_projection(p)?;
        let pep = res.pi(sys, &ep)?;
        let r = op_norm(&(mul(vp, &mul(&vp.adjoint(), q)) - mul(&pep, q)));
        range.see(r, || format!("p={p}"));
        ranges.push(pep);
        let dd = d.saturating_sub(sys.depth(len));
        for b in 0..sys.dim(dd) {
            let x = sys.basis_element(dd, b);
            let lhs = mul(vp, &mul(&res.pi(sys, &x)?, q));
            let rhs = mul(&res.pi(sys, &sys.apply_endo(p, &x)?)?, &vq);
            inter.see_norm(&(lhs - rhs), || {
                format!("p={p}, b={}", sys.describe_basis(dd, b))
            });
        }
        let t = contraction(k, p)?;
        comp_v.see_norm(&(j.adjoint() * vp * j - t), || format!("p={p}"));
        let back = vp.adjoint() * j;
        coinv.see_norm(&(&back - j * (j.adjoint() * &back)), || format!("p={p}"));
    }
    checks.push(iso.check("V(p) isometric on interior(|p|)", tol.residual));
    checks.push(inter.check("V(p)π(b) = π(α_p(b))V(p) on interior(|p|)", tol.residual));
    checks.push(range.check("V(p)V(p)* = π(E_p) on interior(|p|)", tol.residual));

    let e = s.identity();
    let mut comp_pi = Worst::default();
    for b in 0..n {
        let x = sys.basis_element(d, b);
        let lhs = j.adjoint() * mul(&res.representation[b], j);
        let rhs = k.evaluate_unchecked(&e, &x, &e)?;
        comp_pi.see_norm(&(lhs - rhs), || sys.describe_basis(d, b));
    }
    checks.push(comp_pi.check("J*π(a)J = φ(a)", tol.residual));
    checks.push(comp_v.check("J*V(p)J = T(p)", tol.residual));
    checks.push(coinv.check("H co-invariant: (I − JJ*)V(p)*J = 0", tol.residual));

    let mut nica = Worst::default();
    let mut prod = Worst::default();
    for p in &words {
        for q in &words {
            let len = span_length(sys, p) + span_length(sys, q);
            if len > depth {
                continue;
            }
            let x = res.interior(len);
            let lhs = mul(&v(p).adjoint(), &mul(v(q), x));
            let rhs = match s.lcm(p, q)? {
                None => CMat::zeros(res.dim, x.ncols()),
                Some(r) => {
                    let a = s.left_divide(p, &r)?.expect("divides");
                    let b = s.left_divide(q, &r)?.expect("divides");
                    mul(v(&a), &mul(&v(&b).adjoint(), x))
                }
            };
            nica.see_norm(&(lhs - rhs), || format!("p={p}, q={q}"));
        }
        let factors = s.factorize(p)?;
        if factors.len() <= depth && factors.len() > 1 {
            let mut m = id_k.clone();
            for g in &factors {
                m = mul(&m, v(&s.generator(*g)));
            }
            let x = res.interior(factors.len());
            prod.see_norm(&mul(&(m - v(p)), x), || format!("p={p}"));
        }
    }
    checks.push(nica.check("Nica covariance V(p)*V(q) = V(p⁻¹r)V(q⁻¹r)*", tol.residual));
    checks.push(prod.check("V(p) equals the product of its generators", tol.residual));

    let mut repro = Worst::default();
    for p in &words {
        let vpj = v(p) * j;
        for q in &words {
            let basis = sys.corner_basis(p, q, d)?;
            if basis.is_empty() {
                continue;
            }
            let vqj = v(q) * j;
            let picks = 4.min(basis.len());
            for _ in 0..picks {
                let a = &basis[rng.gen_range(0..basis.len())];
                if a.depth > d {
                    continue;
                }
                let lhs = vpj.adjoint() * mul(&res.pi(sys, a)?, &vqj);
                let rhs = k.evaluate_unchecked(p, a, q)?;
                repro.see_norm(&(lhs - rhs), || format!("p={p}, q={q}"));
            }
        }
    }
    checks.push(repro.check("K(p,a,q) = J*V(p)*π(a)V(q)J", tol.residual));
    Ok(checks)
}

/// `Π_{f∈F} (I − V(f)V(f)*) = 0` on the interior of length `max |f|`, after
/// checking that `F` is a foundation set and that `φ_F` vanishes.
pub fn check_boundary_relation(
    res: &DilationResult,
    pair: &CovariantPair,
    f: &[Element],
    tol: Tolerances,
) -> Result<Vec<Check>> {
    let sys = &pair.system;
    let s = sys.semigroup();
    let mut checks = Vec::new();
    let foundation = s.is_foundation_set(f, DEFAULT_ENUMERATION_CAP)?;
    checks.push(Check::at_least(
        "F is a foundation set",
        if foundation { 1.0 } else { 0.0 },
        1.0,
    ));
    let premise = phi_f(pair, f)?
        .values
        .iter()
        .map(op_norm)
        .fold(0.0, f64::max);
    checks.push(Check::at_most("φ_F vanishes", premise, tol.residual));
    let maxlen = f.iter().map(|p| span_length(sys, p)).max().unwrap_or(0);
    if maxlen > res.depth {
        return Err(Error::Invalid(format!(
            "foundation set reaches length {maxlen}, beyond the dilation depth {}",
            res.depth
        )));
    }
    let x = res.interior(maxlen);
    let mut m = CMat::identity(res.dim, res.dim);
    for p in f {
        let vp = res
            .isometry(p)
            .ok_or_else(|| Error::Invalid(format!("no isometry for {p}")))?;
        m = mul(
            &m,
            &(CMat::identity(res.dim, res.dim) - mul(vp, &vp.adjoint())),
        );
    }
    checks.push(Check::at_most(
        "Π (I − V(f)V(f)*) = 0 on interior",
        op_norm(&mul(&m, x)),
        tol.residual,
    ));
    Ok(checks)
}

/// `π(a) = Σ_i V_i π(β_i^{-1}(a)) V_i*` on the interior of length 1, for `a`
/// in the base algebra; this is the boundary relation for the foundation set
/// of all generators.
pub fn check_row_relation(
    res: &DilationResult,
    pair: &CovariantPair,
    tol: Tolerances,
) -> Result<Vec<Check>> {
    let sys = &pair.system;
    let s = sys.semigroup();
    if res.depth == 0 {
        return Err(Error::Invalid(
            "needs a dilation of depth at least 1".into(),
        ));
    }
    let x = res.interior(1);
    let gens = s.generators();
    let mut sum = CMat::zeros(res.dim, res.dim);
    for g in &gens {
        let v = res.isometry(g).expect("generators are within depth");
        sum += mul(v, &v.adjoint());
    }
    let mut checks = vec![Check::at_most(
        "Σ V_iV_i* = I on interior(1)",
        op_norm(&mul(&(sum - CMat::identity(res.dim, res.dim)), x)),
        tol.residual,
    )];
    let dd = 0;
    let mut worst = Worst::default();
    for b in 0..sys.dim(dd) {
        let a = sys.basis_element(dd, b);
        let mut rhs = CMat::zeros(res.dim, res.dim);
        for g in &gens {
            let v = res.isometry(g).expect("generators are within depth");
            let inv = crate::cstar::LevelledElement {
                depth: a.depth,
                values: a
                    .values
                    .iter()
                    .map(|val| sys.beta_inverse(g, val))
                    .collect::<Result<_>>()?,
            };
            rhs += mul(v, &mul(&res.pi(sys, &inv)?, &v.adjoint()));
        }
        let lhs = res.pi(sys, &a)?;
        worst.see_norm(&mul(&(lhs - rhs), x), || sys.describe_basis(dd, b));
    }
    checks.push(worst.check("π(a) = Σ V_iπ(β_i⁻¹(a))V_i* on interior(1)", tol.residual));
    Ok(checks)
}

/// Comparison of dilations built from permuted index orders.
#[derive(Clone, Debug)]
pub struct UniquenessReport {
    pub dims: Vec<usize>,
    /// Largest entry-wise difference between Gram matrices of the spanning
    /// vectors `π(α_q(c))V(q)Jh` across runs.
    pub max_deviation: f64,
    /// Largest difference between those Gram matrices and the kernel Gram.
    pub kernel_deviation: f64,
    pub checks: Vec<Check>,
}

/// Catalog entries whose element `α_q(c)` lies within the represented depth;
/// for `N^m` the deeper ones are left out.
fn probe_entries(sys: &LcmSystem, catalog: &IndexCatalog, depth: usize) -> Result<Vec<usize>> {
    let d = sys.depth(depth);
    let mut out = Vec::new();
    for i in 0..catalog.len() {
        if catalog.element(sys, i)?.depth <= d {
            out.push(i);
        }
    }
    Ok(out)
}

fn spanning_gram<K: Kernel + ?Sized>(
    res: &DilationResult,
    k: &K,
    catalog: &IndexCatalog,
    entries: &[usize],
) -> Result<CMat> {
    let sys = k.system();
    let h = res.h;
    let mut span = CMat::zeros(res.dim, entries.len() * h);
    for (col, &i) in entries.iter().enumerate() {
        let e = &catalog.entries[i];
        let a = catalog.element(sys, i)?;
        let v = res
            .isometry(&e.word)
            .ok_or_else(|| Error::Invalid(format!("no isometry for {}", e.word)))?;
        let vecs = mul(&res.pi(sys, &a)?, &(v * &res.embedding));
        span.view_mut((0, col * h), (res.dim, h)).copy_from(&vecs);
    }
    Ok(mul(&span.adjoint(), &span))
}

/// Builds the dilation once in catalog order and once per seed with the
/// index order shuffled, and compares the resulting geometry.
pub fn uniqueness_probe<K: Kernel + ?Sized>(
    k: &K,
    depth: usize,
    seeds: &[u64],
    tol: Tolerances,
    max_dim: usize,
) -> Result<UniquenessReport> {
    let sys = k.system();
    let canonical = IndexCatalog::new(sys, depth)?;
    let base = build_result(k, canonical.clone(), depth, tol, max_dim, false)?;
    let entries = probe_entries(sys, &canonical, depth)?;
    let g0 = spanning_gram(&base, k, &canonical, &entries)?;
    let full = assemble_gram_on(k, canonical.clone(), max_dim)?.matrix;
    let h = base.h;
    let kernel_gram = CMat::from_fn(entries.len() * h, entries.len() * h, |i, j| {
        full[(entries[i / h] * h + i % h, entries[j / h] * h + j % h)]
    });
    let kernel_deviation = crate::linalg::max_abs(&(&g0 - &kernel_gram));
    let mut dims = vec![base.dim];
    let mut max_deviation: f64 = 0.0;
    for &seed in seeds {
        let mut order: Vec<usize> = (0..canonical.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let run = build_result(k, canonical.permuted(&order), depth, tol, max_dim, false)?;
        dims.push(run.dim);
        let g = spanning_gram(&run, k, &canonical, &entries)?;
        max_deviation = max_deviation.max(crate::linalg::max_abs(&(&g - &g0)));
    }
    let same_dim = dims.iter().all(|&d| d == dims[0]);
    let checks = vec![
        Check::at_most(
            "dimension independent of index order",
            if same_dim { 0.0 } else { 1.0 },
            0.0,
        ),
        Check::at_most(
            "spanning-vector Gram independent of index order",
            max_deviation,
            tol.residual,
        ),
        Check::at_most(
            "spanning-vector Gram equals kernel Gram",
            kernel_deviation,
            tol.residual,
        ),
    ];
    Ok(UniquenessReport {
        dims,
        max_deviation,
        kernel_deviation,
        checks,
    })
}
