//! The subcommands, each producing a report.

use std::path::PathBuf;
use std::time::Instant;

use lcm_dilation::check::Check;
use lcm_dilation::cpmaps::{is_completely_positive, nica_defect, CovariantPair};
use lcm_dilation::cstar::Model;
use lcm_dilation::dilation::{
    check_boundary_relation, check_row_relation, covariant_dilate, uniqueness_probe,
    verify_dilation, DilationResult, Tolerances,
};
use lcm_dilation::kernel::{check_kernel_properties, PairKernel};
use lcm_dilation::linalg::psd_check;
use lcm_dilation::semigroup::{Element, RightLcmSemigroup, DEFAULT_ENUMERATION_CAP};
use lcm_dilation::Error;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{Instance, SchemaError};
use crate::report::Report;
use crate::stored::StoredResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    CheckCp,
    CheckNica,
    Dilate,
    Verify,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::CheckCp => "check-cp",
            Command::CheckNica => "check-nica",
            Command::Dilate => "dilate",
            Command::Verify => "verify",
            Command::Report => "report",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub depth: Option<usize>,
    pub tol_psd: Option<f64>,
    pub tol_rank: Option<f64>,
    pub seed: Option<u64>,
    pub max_dim: usize,
    /// Where `dilate` stores its result and `verify` reads one.
    pub result: Option<PathBuf>,
}

/// Failures that are not mathematical verdicts (exit code 2).
#[derive(Debug, thiserror::Error)]
pub enum UsageError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("{0}")]
    Usage(String),
}

pub struct Outcome {
    pub report: Report,
    pub stored: Option<StoredResult>,
}

/// Subsets of the depth-bounded elements examined exhaustively by `check-nica`
/// up to this many elements; beyond it subsets are sampled.
pub const EXHAUSTIVE_ELEMENTS: usize = 12;
pub const SAMPLED_SUBSETS: usize = 2048;

/// Mathematical errors become failing checks; the rest are usage errors.
fn as_check(name: &str, e: Error) -> Result<Check, UsageError> {
    let fail = |value: f64, tol: f64, witness: String| {
        Ok(Check::at_most(name, value, tol).with_witness(Some(witness)))
    };
    let msg = e.to_string();
    match e {
        Error::NotPositive {
            min_eigenvalue,
            witness,
            ..
        } => {
            let labels: Vec<String> = witness.iter().map(|(l, w)| format!("{l}:{w:.3}")).collect();
            Ok(
                Check::at_least(name, min_eigenvalue, 0.0).with_witness(Some(format!(
                    "{msg}; eigenvector weight on {}",
                    labels.join(", ")
                ))),
            )
        }
        Error::NotCompletelyPositive { min_eigenvalue, .. } => {
            Ok(Check::at_least(name, min_eigenvalue, 0.0).with_witness(Some(msg)))
        }
        Error::NotUnitary { residual, .. }
        | Error::NotBlockPreserving { residual, .. }
        | Error::NotConformable { residual }
        | Error::NotInCorner { residual }
        | Error::NotUnital { residual }
        | Error::NotSelfAdjoint { residual }
        | Error::NotCommuting { residual, .. }
        | Error::NotCovariant { residual, .. }
        | Error::Inconsistent { residual } => fail(residual, 0.0, msg),
        Error::NotContractive { norm, .. } => fail(norm, 1.0, msg),
        _ => Err(UsageError::Usage(msg)),
    }
}

struct Ctx<'a> {
    inst: &'a Instance,
    opts: &'a Options,
    depth: usize,
    seed: u64,
    tol: Tolerances,
    report: Report,
    pair_reported: bool,
}

impl Ctx<'_> {
    fn stage<T>(
        &mut self,
        f: impl FnOnce(&mut Vec<Check>) -> Result<T, UsageError>,
    ) -> Result<T, UsageError> {
        let start = Instant::now();
        let mut checks = Vec::new();
        let out = f(&mut checks);
        let ms = start.elapsed().as_secs_f64() * 1e3;
        self.report.push(checks, ms);
        out
    }

    fn pair(&mut self) -> Result<Option<CovariantPair>, UsageError> {
        let Some(pair) = self.inst.pair() else {
            return Ok(None);
        };
        if std::mem::replace(&mut self.pair_reported, true) {
            return Ok(pair.ok());
        }
        self.stage(|checks| match pair {
            Ok(p) => {
                checks.push(Check::at_most("covariant pair well formed", 0.0, 0.0));
                Ok(Some(p))
            }
            Err(e) => {
                checks.push(as_check("covariant pair well formed", e)?);
                Ok(None)
            }
        })
    }

    fn require_pair(&mut self) -> Result<Option<CovariantPair>, UsageError> {
        if self.inst.def.phi.is_none() || self.inst.def.t.is_none() {
            return Err(UsageError::Usage(
                "this command needs both \"phi\" and \"t\" in the instance".into(),
            ));
        }
        self.pair()
    }

    fn validate(&mut self) -> Result<(), UsageError> {
        let depth = self.depth;
        let sys = self.inst.system();
        self.stage(|checks| {
            match sys.and_then(|s| s.validate(depth)) {
                Ok(c) => checks.extend(c),
                Err(e) => checks.push(as_check("system well formed", e)?),
            }
            Ok(())
        })?;
        if let Some(t) = self.inst.contractions() {
            self.stage(|checks| {
                match t {
                    Ok(_) => checks.push(Check::at_most("contractions well formed", 0.0, 0.0)),
                    Err(e) => checks.push(as_check("contractions well formed", e)?),
                }
                Ok(())
            })?;
        }
        if self.inst.def.phi.is_some() && self.inst.def.t.is_some() {
            self.pair()?;
        }
        Ok(())
    }

    fn check_cp(&mut self) -> Result<(), UsageError> {
        let Some(phi) = self.inst.phi() else {
            return Err(UsageError::Usage("the instance has no \"phi\"".into()));
        };
        let phi = phi.map_err(|e| UsageError::Usage(e.to_string()))?;
        let tol = self.tol.psd;
        self.stage(|checks| {
            let v = is_completely_positive(&phi, tol);
            checks.push(
                Check::at_least(
                    "φ completely positive (min Choi eigenvalue)",
                    v.min_eigenvalue,
                    -tol * v.scale,
                )
                .with_witness(v.witness.map(|(b, _)| format!("block {b}"))),
            );
            Ok(())
        })?;
        if self.inst.def.t.is_some() {
            if let Some(pair) = self.pair()? {
                let depth = self.depth;
                self.stage(|checks| {
                    let lifted = pair
                        .lifted_map(depth)
                        .map_err(|e| UsageError::Usage(e.to_string()))?;
                    let v = lifted.complete_positivity(tol);
                    checks.push(
                        Check::at_least(
                            format!("lifted φ completely positive at depth {depth}"),
                            v.min_eigenvalue,
                            -tol * v.scale,
                        )
                        .with_witness(v.witness.map(|(b, _)| format!("atom block {b}"))),
                    );
                    Ok(())
                })?;
            }
        }
        Ok(())
    }

    fn check_nica(&mut self) -> Result<(), UsageError> {
        let Some(t) = self.inst.contractions() else {
            return Err(UsageError::Usage("the instance has no \"t\"".into()));
        };
        let t = match t {
            Ok(t) => t,
            Err(e) => {
                let c = as_check("contractions well formed", e)?;
                self.report.push([c], 0.0);
                return Ok(());
            }
        };
        let (depth, seed, tol) = (self.depth, self.seed, self.tol.psd);
        self.stage(|checks| {
            let s = t.semigroup();
            let elems: Vec<Element> = s
                .enumerate_up_to(depth, DEFAULT_ENUMERATION_CAP)
                .map_err(|e| UsageError::Usage(e.to_string()))?
                .into_iter()
                .filter(|p| !s.is_identity(p))
                .collect();
            let n = elems.len();
            let subsets: Vec<Vec<usize>> = if n <= EXHAUSTIVE_ELEMENTS {
                (1usize..1 << n)
                    .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
                    .collect()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..SAMPLED_SUBSETS)
                    .map(|_| {
                        let k = rng.gen_range(1..=n.min(6));
                        let mut idx = sample(&mut rng, n, k).into_vec();
                        idx.sort_unstable();
                        idx
                    })
                    .collect()
            };
            let mut worst = f64::INFINITY;
            let mut witness = String::new();
            let mut scale: f64 = 1.0;
            for sub in &subsets {
                let f: Vec<Element> = sub.iter().map(|&i| elems[i].clone()).collect();
                let d = nica_defect(&t, &f).map_err(|e| UsageError::Usage(e.to_string()))?;
                let v = psd_check(&d, tol);
                let min = v.min_eigenvalue;
                scale = scale.max(v.scale);
                if min < worst {
                    worst = min;
                    let names: Vec<String> = f.iter().map(|p| p.to_string()).collect();
                    witness = format!("F={{{}}}, eigenvalue {min:.6e}", names.join(", "));
                }
            }
            let mode = if n <= EXHAUSTIVE_ELEMENTS {
                "all"
            } else {
                "sampled"
            };
            let c = Check::at_least(
                format!(
                    "Nica defect positive ({mode} {} subsets of elements up to depth {depth})",
                    subsets.len()
                ),
                worst,
                -tol * scale,
            );
            let failed = !c.passed;
            checks.push(c.with_witness(failed.then_some(witness)));
            Ok(())
        })
    }

    fn boundary(&mut self, res: &DilationResult, pair: &CovariantPair) -> Result<(), UsageError> {
        if pair.system.model() != Model::BoundaryFree || res.depth == 0 {
            return Ok(());
        }
        let tol = self.tol;
        self.stage(|checks| {
            let f = pair.system.semigroup().generators();
            let usage = |e: Error| UsageError::Usage(e.to_string());
            checks.extend(check_boundary_relation(res, pair, &f, tol).map_err(usage)?);
            checks.extend(check_row_relation(res, pair, tol).map_err(usage)?);
            Ok(())
        })
    }

    fn dilate(&mut self) -> Result<Option<StoredResult>, UsageError> {
        let Some(pair) = self.require_pair()? else {
            return Ok(None);
        };
        let (depth, tol, max_dim) = (self.depth, self.tol, self.opts.max_dim);
        let res = self.stage(
            |checks| match covariant_dilate(&pair, depth, tol, max_dim) {
                Ok(res) => {
                    checks.extend(res.report.iter().cloned());
                    Ok(Some(res))
                }
                Err(e) => {
                    let name = match e {
                        Error::NotCompletelyPositive { .. } => "lifted φ completely positive",
                        _ => "Gram matrix positive",
                    };
                    checks.push(as_check(name, e)?);
                    Ok(None)
                }
            },
        )?;
        let Some(res) = res else {
            return Ok(None);
        };
        self.boundary(&res, &pair)?;
        Ok(Some(StoredResult::new(&res, &self.inst.hash)))
    }

    fn verify(&mut self) -> Result<(), UsageError> {
        let path = self
            .opts
            .result
            .clone()
            .ok_or_else(|| UsageError::Usage("verify needs --result <path>".into()))?;
        let text = std::fs::read_to_string(&path)
            .map_err(|e| UsageError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let stored: StoredResult = serde_json::from_str(&text)
            .map_err(|e| UsageError::Usage(format!("{}: {e}", path.display())))?;
        if stored.instance_hash != self.inst.hash {
            return Err(UsageError::Usage(format!(
                "{} was computed for instance {}, not {}",
                path.display(),
                stored.instance_hash,
                self.inst.hash
            )));
        }
        let res = stored.to_result().map_err(UsageError::Usage)?;
        self.depth = res.depth;
        self.report.depth = res.depth;
        let Some(pair) = self.require_pair()? else {
            return Ok(());
        };
        let (tol, seed) = (self.tol, self.seed);
        self.stage(|checks| {
            let kernel = PairKernel::new(pair.clone());
            let c = verify_dilation(&res, &kernel, tol, seed)
                .map_err(|e| UsageError::Usage(e.to_string()))?;
            checks.extend(c);
            Ok(())
        })?;
        self.boundary(&res, &pair)
    }

    fn full_report(&mut self) -> Result<Option<StoredResult>, UsageError> {
        self.validate()?;
        if self.inst.def.phi.is_some() {
            self.check_cp()?;
        }
        if self.inst.def.t.is_some() {
            self.check_nica()?;
        }
        if self.inst.def.phi.is_none() || self.inst.def.t.is_none() {
            return Ok(None);
        }
        let Some(pair) = self.inst.pair().and_then(Result::ok) else {
            return Ok(None);
        };
        let (depth, seed, tol, max_dim) = (self.depth, self.seed, self.tol, self.opts.max_dim);
        let kernel = PairKernel::new(pair);
        self.stage(|checks| {
            let c = check_kernel_properties(&kernel, depth, 4, seed)
                .map_err(|e| UsageError::Usage(e.to_string()))?;
            checks.extend(c);
            Ok(())
        })?;
        let stored = self.dilate()?;
        if stored.is_some() {
            self.stage(|checks| {
                let seeds = [seed.wrapping_add(1), seed.wrapping_add(2)];
                let probe = uniqueness_probe(&kernel, depth, &seeds, tol, max_dim)
                    .map_err(|e| UsageError::Usage(e.to_string()))?;
                checks.extend(probe.checks);
                Ok(())
            })?;
        }
        Ok(stored)
    }
}

pub fn run(
    cmd: Command,
    inst: &Instance,
    name: &str,
    opts: &Options,
) -> Result<Outcome, UsageError> {
    let depth = opts.depth.or(inst.def.depth).unwrap_or(2);
    let seed = opts.seed.or(inst.def.seed).unwrap_or(0);
    let mut tol = inst.tolerances();
    tol.psd = opts.tol_psd.unwrap_or(tol.psd);
    tol.rank = opts.tol_rank.unwrap_or(tol.rank);
    let mut ctx = Ctx {
        inst,
        opts,
        depth,
        seed,
        tol,
        report: Report::new(cmd.name(), name, &inst.hash, depth, seed),
        pair_reported: false,
    };
    let stored = match cmd {
        Command::Validate => ctx.validate().map(|_| None),
        Command::CheckCp => ctx.check_cp().map(|_| None),
        Command::CheckNica => ctx.check_nica().map(|_| None),
        Command::Dilate => ctx.dilate(),
        Command::Verify => ctx.verify().map(|_| None),
        Command::Report => ctx.full_report(),
    }?;
    Ok(Outcome {
        report: ctx.report.finish(),
        stored,
    })
}
