//! The operation table: typed parameters for every `(module, operation)` pair and their execution.

use abp_core::abp::pipeline::{self, AbpOptions};
use abp_core::abp::serre::CollocationGrid;
use abp_core::geom::{build_catalog_surface, minimality_residual, random_positive_trig, FunctionDescriptor, Hypersurface, SurfaceDescriptor, MIN_RESOLUTION};
use abp_core::logsob::{self, ConstantVariant, LogSobInput};
use abp_core::quermass;
use abp_core::report::scale_of;
use abp_core::serre::{build_equality_case, check_serre, DomainDescriptor, EuclideanDomain, FieldDescriptor, Potential};
use abp_core::symalg::sampling::{random_in_cone, random_positive_definite, random_psd, random_symmetric};
use abp_core::symalg::{self, elementary_symmetric, newton_tensor, SymMatrix};
use abp_core::{Result, VerificationReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;

/// Relative tolerance of the identity and lemma batteries.
pub const IDENTITY_REL_TOL: f64 = 1e-10;
/// Tolerance of the minimality residual.
pub const MINIMALITY_TOL: f64 = 1e-8;

/// `(module, operation)` pairs accepted in a campaign.
pub const OPERATIONS: &[(&str, &[&str])] = &[
    ("symalg", &["newton_identities", "garding_inequality", "det_tk_bound", "amgm"]),
    ("geom", &["minimality_residual"]),
    ("quermass", &["main", "corollary", "af", "holder", "scale_invariance"]),
    ("serre", &["check", "random_fields", "equality_case"]),
    (
        "logsob",
        &[
            "deficit",
            "random_trig",
            "constant_reduction",
            "eigenfunction",
            "area_comparison",
            "sharpness",
            "classical_sphere",
            "superadditivity",
        ],
    ),
    ("abp", &["logsob-m1", "logsob-annulus", "serre", "quermass"]),
];

fn split_catalog(v: Value, what: &str) -> std::result::Result<(String, Value), String> {
    let Value::Object(mut obj) = v else {
        return Err(format!("{what} descriptor must be an object with a \"name\" key"));
    };
    let name = match obj.remove("name") {
        Some(Value::String(s)) => s,
        _ => return Err(format!("{what} descriptor is missing a string \"name\"")),
    };
    Ok((name, Value::Object(obj)))
}

fn de_surface<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<SurfaceDescriptor, D::Error> {
    let (name, params) = split_catalog(Value::deserialize(d)?, "surface").map_err(D::Error::custom)?;
    SurfaceDescriptor::parse(&name, &params).map_err(D::Error::custom)
}

fn de_domain<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DomainDescriptor, D::Error> {
    let (name, params) = split_catalog(Value::deserialize(d)?, "domain").map_err(D::Error::custom)?;
    DomainDescriptor::parse(&name, &params).map_err(D::Error::custom)
}

fn de_field<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<FieldDescriptor, D::Error> {
    let (name, params) = split_catalog(Value::deserialize(d)?, "field").map_err(D::Error::custom)?;
    FieldDescriptor::parse(&name, &params).map_err(D::Error::custom)
}

fn de_variant<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ConstantVariant, D::Error> {
    ConstantVariant::parse(&String::deserialize(d)?).map_err(D::Error::custom)
}

fn one_f() -> FunctionDescriptor {
    FunctionDescriptor::Constant { value: 1.0 }
}

fn sharp() -> ConstantVariant {
    ConstantVariant::SharpM12
}

fn battery_size() -> usize {
    10_000
}

fn hundred() -> usize {
    100
}

fn n_min() -> usize {
    2
}

fn n_max() -> usize {
    6
}

fn two() -> usize {
    2
}

fn three() -> usize {
    3
}

fn trig_floor() -> f64 {
    0.3
}

fn targets() -> usize {
    AbpOptions::default().targets
}

fn fiber_nodes() -> usize {
    AbpOptions::default().fiber_nodes
}

fn lambdas() -> Vec<f64> {
    vec![0.5, 3.0]
}

fn reduction_dims() -> Vec<usize> {
    (1..=8).collect()
}

fn minimality_tol() -> f64 {
    MINIMALITY_TOL
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixBattery {
    #[serde(default = "battery_size")]
    pub samples: usize,
    #[serde(default = "n_min")]
    pub n_min: usize,
    #[serde(default = "n_max")]
    pub n_max: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceParams {
    #[serde(deserialize_with = "de_surface")]
    pub surface: SurfaceDescriptor,
    pub resolution: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimalityParams {
    #[serde(deserialize_with = "de_surface")]
    pub surface: SurfaceDescriptor,
    pub resolution: usize,
    #[serde(default = "minimality_tol")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuermassParams {
    #[serde(deserialize_with = "de_surface")]
    pub surface: SurfaceDescriptor,
    pub resolution: usize,
    #[serde(default)]
    pub k: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleInvarianceParams {
    #[serde(deserialize_with = "de_surface")]
    pub surface: SurfaceDescriptor,
    pub resolution: usize,
    #[serde(default)]
    pub k: usize,
    #[serde(default = "lambdas")]
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SerreParams {
    #[serde(deserialize_with = "de_domain")]
    pub domain: DomainDescriptor,
    pub resolution: usize,
    #[serde(deserialize_with = "de_field")]
    pub field: FieldDescriptor,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SerreRandomParams {
    #[serde(deserialize_with = "de_domain")]
    pub domain: DomainDescriptor,
    pub resolution: usize,
    #[serde(default = "hundred")]
    pub samples: usize,
    #[serde(default = "two")]
    pub terms: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EqualityCaseParams {
    #[serde(deserialize_with = "de_domain")]
    pub domain: DomainDescriptor,
    pub resolution: usize,
    pub potential: Potential,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeficitParams {
    #[serde(deserialize_with = "de_surface")]
    pub surface: SurfaceDescriptor,
    pub resolution: usize,
    #[serde(default = "one_f")]
    pub f: FunctionDescriptor,
    #[serde(default = "sharp", deserialize_with = "de_variant")]
    pub variant: ConstantVariant,
    /// Codimension; defaults to the native one.
    #[serde(default)]
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomTrigParams {
    #[serde(deserialize_with = "de_surface")]
    pub surface: SurfaceDescriptor,
    pub resolution: usize,
    #[serde(default = "hundred")]
    pub samples: usize,
    #[serde(default = "three")]
    pub terms: usize,
    #[serde(default = "trig_floor")]
    pub floor: f64,
    #[serde(default = "sharp", deserialize_with = "de_variant")]
    pub variant: ConstantVariant,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionParams {
    #[serde(default = "reduction_dims")]
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenfunctionParams {
    #[serde(deserialize_with = "de_surface")]
    pub surface: SurfaceDescriptor,
    pub resolution: usize,
    pub xi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpnessParams {
    #[serde(deserialize_with = "de_surface")]
    pub surface: SurfaceDescriptor,
    pub resolution: usize,
    #[serde(default = "one_f")]
    pub f: FunctionDescriptor,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalSphereParams {
    pub n: usize,
    pub resolution: usize,
    #[serde(default = "one_f")]
    pub f: FunctionDescriptor,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperadditivityParams {
    #[serde(default = "battery_size")]
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogSobAbpParams {
    #[serde(deserialize_with = "de_surface")]
    pub surface: SurfaceDescriptor,
    pub resolution: usize,
    #[serde(default = "one_f")]
    pub f: FunctionDescriptor,
    #[serde(default = "targets")]
    pub targets: usize,
    #[serde(default = "fiber_nodes")]
    pub fiber_nodes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusAbpParams {
    #[serde(deserialize_with = "de_surface")]
    pub surface: SurfaceDescriptor,
    pub resolution: usize,
    #[serde(default = "one_f")]
    pub f: FunctionDescriptor,
    pub r_grid: Vec<f64>,
    pub inner_radius: f64,
    #[serde(default = "targets")]
    pub targets: usize,
    #[serde(default = "fiber_nodes")]
    pub fiber_nodes: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    pub radial: usize,
    pub angular: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SerreAbpParams {
    #[serde(deserialize_with = "de_domain")]
    pub domain: DomainDescriptor,
    pub resolution: usize,
    #[serde(deserialize_with = "de_field")]
    pub field: FieldDescriptor,
    /// Collocation grid; chosen from the domain when absent.
    #[serde(default)]
    pub grid: Option<GridParams>,
    /// Multiplies the collocation grid, set from the resolution scale.
    #[serde(default = "unit")]
    pub grid_scale: f64,
    #[serde(default = "targets")]
    pub targets: usize,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuermassAbpParams {
    #[serde(deserialize_with = "de_surface")]
    pub surface: SurfaceDescriptor,
    pub resolution: usize,
    #[serde(default)]
    pub k: usize,
    #[serde(default = "targets")]
    pub targets: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Operation {
    NewtonIdentities(MatrixBattery),
    Garding(MatrixBattery),
    DetTkBound(MatrixBattery),
    AmGm(MatrixBattery),
    Minimality(MinimalityParams),
    QuermassMain(QuermassParams),
    QuermassCorollary(QuermassParams),
    QuermassAf(QuermassParams),
    QuermassHolder(QuermassParams),
    QuermassScale(ScaleInvarianceParams),
    SerreCheck(SerreParams),
    SerreRandom(SerreRandomParams),
    SerreEquality(EqualityCaseParams),
    LogSobDeficit(DeficitParams),
    LogSobRandom(RandomTrigParams),
    ConstantReduction(ReductionParams),
    Eigenfunction(EigenfunctionParams),
    AreaComparison(SurfaceParams),
    Sharpness(SharpnessParams),
    ClassicalSphere(ClassicalSphereParams),
    Superadditivity(SuperadditivityParams),
    AbpLogSobM1(LogSobAbpParams),
    AbpLogSobAnnulus(AnnulusAbpParams),
    AbpSerre(SerreAbpParams),
    AbpQuermass(QuermassAbpParams),
}

fn params<T: DeserializeOwned>(v: &Value) -> std::result::Result<T, String> {
    let v = if v.is_null() { Value::Object(Default::default()) } else { v.clone() };
    serde_json::from_value(v).map_err(|e| format!("invalid params: {e}"))
}

fn scale_res(res: &mut usize, scale: f64) {
    *res = ((*res as f64 * scale).round() as usize).max(MIN_RESOLUTION);
}

impl Operation {
    /// Validate `params` for `(module, operation)` and apply the resolution scale.
    pub fn parse(module: &str, operation: &str, p: &Value, scale: f64) -> std::result::Result<Self, String> {
        let Some((_, ops)) = OPERATIONS.iter().find(|(m, _)| *m == module) else {
            return Err(format!("unknown module '{module}'"));
        };
        if !ops.contains(&operation) {
            return Err(format!("unknown operation '{operation}' in module '{module}'"));
        }
        let mut op = match (module, operation) {
            ("symalg", "newton_identities") => Operation::NewtonIdentities(params(p)?),
            ("symalg", "garding_inequality") => Operation::Garding(params(p)?),
            ("symalg", "det_tk_bound") => Operation::DetTkBound(params(p)?),
            ("symalg", "amgm") => Operation::AmGm(params(p)?),
            ("geom", "minimality_residual") => Operation::Minimality(params(p)?),
            ("quermass", "main") => Operation::QuermassMain(params(p)?),
            ("quermass", "corollary") => Operation::QuermassCorollary(params(p)?),
            ("quermass", "af") => Operation::QuermassAf(params(p)?),
            ("quermass", "holder") => Operation::QuermassHolder(params(p)?),
            ("quermass", "scale_invariance") => Operation::QuermassScale(params(p)?),
            ("serre", "check") => Operation::SerreCheck(params(p)?),
            ("serre", "random_fields") => Operation::SerreRandom(params(p)?),
            ("serre", "equality_case") => Operation::SerreEquality(params(p)?),
            ("logsob", "deficit") => Operation::LogSobDeficit(params(p)?),
            ("logsob", "random_trig") => Operation::LogSobRandom(params(p)?),
            ("logsob", "constant_reduction") => Operation::ConstantReduction(params(p)?),
            ("logsob", "eigenfunction") => Operation::Eigenfunction(params(p)?),
            ("logsob", "area_comparison") => Operation::AreaComparison(params(p)?),
            ("logsob", "sharpness") => Operation::Sharpness(params(p)?),
            ("logsob", "classical_sphere") => Operation::ClassicalSphere(params(p)?),
            ("logsob", "superadditivity") => Operation::Superadditivity(params(p)?),
            ("abp", "logsob-m1") => Operation::AbpLogSobM1(params(p)?),
            ("abp", "logsob-annulus") => Operation::AbpLogSobAnnulus(params(p)?),
            ("abp", "serre") => Operation::AbpSerre(params(p)?),
            ("abp", "quermass") => Operation::AbpQuermass(params(p)?),
            _ => unreachable!("operation table and dispatch disagree"),
        };
        op.validate()?;
        if scale != 1.0 {
            op.rescale(scale);
        }
        Ok(op)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let battery = |b: &MatrixBattery| {
            if b.n_min < 2 || b.n_min > b.n_max || b.n_max > symalg::MAX_DIM {
                return Err(format!("matrix sizes must satisfy 2 ≤ n_min ≤ n_max ≤ {}", symalg::MAX_DIM));
            }
            Ok(())
        };
        match self {
            Operation::NewtonIdentities(b) | Operation::Garding(b) | Operation::DetTkBound(b) | Operation::AmGm(b) => battery(b),
            Operation::QuermassScale(p) if p.lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) => {
                Err("scale factors must be positive".into())
            }
            Operation::ConstantReduction(p) if p.dims.contains(&0) => Err("dimensions must be at least 1".into()),
            Operation::AbpLogSobAnnulus(p) if !(p.inner_radius >= 0.0 && p.inner_radius < 1.0) => {
                Err("inner_radius must lie in [0, 1)".into())
            }
            Operation::AbpSerre(p) if !(p.grid_scale > 0.0 && p.grid_scale.is_finite()) => Err("grid_scale must be positive".into()),
            _ => Ok(()),
        }
    }

    fn rescale(&mut self, s: f64) {
        match self {
            Operation::Minimality(p) => scale_res(&mut p.resolution, s),
            Operation::QuermassMain(p) | Operation::QuermassCorollary(p) | Operation::QuermassAf(p) | Operation::QuermassHolder(p) => {
                scale_res(&mut p.resolution, s)
            }
            Operation::QuermassScale(p) => scale_res(&mut p.resolution, s),
            Operation::SerreCheck(p) => scale_res(&mut p.resolution, s),
            Operation::SerreRandom(p) => scale_res(&mut p.resolution, s),
            Operation::SerreEquality(p) => scale_res(&mut p.resolution, s),
            Operation::LogSobDeficit(p) => scale_res(&mut p.resolution, s),
            Operation::LogSobRandom(p) => scale_res(&mut p.resolution, s),
            Operation::Eigenfunction(p) => scale_res(&mut p.resolution, s),
            Operation::AreaComparison(p) => scale_res(&mut p.resolution, s),
            Operation::Sharpness(p) => scale_res(&mut p.resolution, s),
            Operation::ClassicalSphere(p) => scale_res(&mut p.resolution, s),
            Operation::AbpLogSobM1(p) => scale_res(&mut p.resolution, s),
            Operation::AbpLogSobAnnulus(p) => scale_res(&mut p.resolution, s),
            Operation::AbpSerre(p) => {
                scale_res(&mut p.resolution, s);
                p.grid_scale *= s;
            }
            Operation::AbpQuermass(p) => scale_res(&mut p.resolution, s),
            Operation::NewtonIdentities(_)
            | Operation::Garding(_)
            | Operation::DetTkBound(_)
            | Operation::AmGm(_)
            | Operation::ConstantReduction(_)
            | Operation::Superadditivity(_) => {}
        }
    }

    /// Parameters after defaults and scaling, as they enter the digest.
    pub fn resolved_params(&self) -> Value {
        serde_json::to_value(self).expect("parameters serialize")
    }

    pub fn run(&self, seed: u64) -> Result<Vec<VerificationReport>> {
        let one = |r: Result<VerificationReport>| r.map(|r| vec![r]);
        match self {
            Operation::NewtonIdentities(b) => one(newton_identities(b, seed)),
            Operation::Garding(b) => one(garding_battery(b, seed)),
            Operation::DetTkBound(b) => one(det_tk_battery(b, seed)),
            Operation::AmGm(b) => one(amgm_battery(b, seed)),
            Operation::Minimality(p) => {
                let s = build_catalog_surface(&p.surface, p.resolution)?;
                let r = minimality_residual(&s)?;
                one(Ok(VerificationReport::residual("minimality_residual", r, p.tolerance).with("resolution", p.resolution)))
            }
            Operation::QuermassMain(p) => one(quermass::check_quermass_main(&surface(&p.surface, p.resolution)?, p.k)),
            Operation::QuermassCorollary(p) => one(quermass::check_quermass_corollary(&surface(&p.surface, p.resolution)?, p.k)),
            Operation::QuermassAf(p) => one(quermass::check_af_inequality(&surface(&p.surface, p.resolution)?, p.k)),
            Operation::QuermassHolder(p) => one(quermass::check_holder_chain(&surface(&p.surface, p.resolution)?, p.k)),
            Operation::QuermassScale(p) => one(scale_invariance(p)),
            Operation::SerreCheck(p) => {
                let d = EuclideanDomain::build(&p.domain, p.resolution)?;
                one(check_serre(&d, &p.field.instantiate(d.n)?))
            }
            Operation::SerreRandom(p) => one(serre_random(p, seed)),
            Operation::SerreEquality(p) => {
                let d = EuclideanDomain::build(&p.domain, p.resolution)?;
                let a = build_equality_case(&p.potential, &d)?;
                one(check_serre(&d, &a).map(|r| r.with("potential", serde_json::to_value(&p.potential).expect("serializable"))))
            }
            Operation::LogSobDeficit(p) => {
                let s = surface(&p.surface, p.resolution)?;
                let mut input = LogSobInput::new(&s, &p.f, p.variant)?;
                if let Some(m) = p.m {
                    input = input.with_codimension(m)?;
                }
                one(logsob::logsob_deficit(&input))
            }
            Operation::LogSobRandom(p) => one(logsob_random(p, seed)),
            Operation::ConstantReduction(p) => {
                let reports = p.dims.iter().map(|&n| logsob::constant_reduction_check(n)).collect::<Result<Vec<_>>>()?;
                one(Ok(aggregate("logsob:constant_reduction", &reports).with("dims", p.dims.clone())))
            }
            Operation::Eigenfunction(p) => one(logsob::eigenfunction_identity_check(&surface(&p.surface, p.resolution)?, &p.xi)),
            Operation::AreaComparison(p) => one(logsob::area_comparison(&surface(&p.surface, p.resolution)?)),
            Operation::Sharpness(p) => one(logsob::sharpness_comparison(&p.f, &surface(&p.surface, p.resolution)?)),
            Operation::ClassicalSphere(p) => one(logsob::classical_sphere_check(&p.f, p.n, p.resolution)),
            Operation::Superadditivity(p) => one(superadditivity(p, seed)),
            Operation::AbpLogSobM1(p) => {
                let opts = AbpOptions { targets: p.targets, seed, fiber_nodes: p.fiber_nodes };
                pipeline::logsob_m1(&surface(&p.surface, p.resolution)?, &p.f, &opts)
            }
            Operation::AbpLogSobAnnulus(p) => {
                let opts = AbpOptions { targets: p.targets, seed, fiber_nodes: p.fiber_nodes };
                pipeline::logsob_annulus(&surface(&p.surface, p.resolution)?, &p.f, &p.r_grid, p.inner_radius, &opts)
            }
            Operation::AbpSerre(p) => {
                let d = EuclideanDomain::build(&p.domain, p.resolution)?;
                let base = match p.grid {
                    Some(g) => CollocationGrid { radial: g.radial, angular: g.angular },
                    None => CollocationGrid::for_domain(&d),
                };
                let grid = if p.grid_scale == 1.0 { base } else { base.scaled(p.grid_scale) };
                let opts = AbpOptions { targets: p.targets, seed, ..AbpOptions::default() };
                let reports = pipeline::serre(&d, &p.field.instantiate(d.n)?, grid, &opts)?;
                Ok(reports.into_iter().map(|r| r.with("grid_radial", grid.radial).with("grid_angular", grid.angular)).collect())
            }
            Operation::AbpQuermass(p) => {
                let opts = AbpOptions { targets: p.targets, seed, ..AbpOptions::default() };
                pipeline::quermass(&surface(&p.surface, p.resolution)?, p.k, &opts)
            }
        }
    }
}

fn surface(d: &SurfaceDescriptor, res: usize) -> Result<Hypersurface> {
    build_catalog_surface(d, res)
}

fn relative(r: &VerificationReport) -> f64 {
    r.deficit / scale_of(r.lhs, r.rhs)
}

/// One report standing for a battery: the worst member's sides, pass iff every member passes.
fn aggregate(check: &str, reports: &[VerificationReport]) -> VerificationReport {
    let Some(worst) = reports.iter().min_by(|a, b| relative(a).total_cmp(&relative(b))) else {
        return VerificationReport::from_deficit(check, 0.0, 0.0, 0.0, 0.0).with("samples", 0);
    };
    let failures = reports.iter().filter(|r| !r.pass).count();
    let mut out = VerificationReport::from_deficit(check, worst.lhs, worst.rhs, worst.deficit, worst.tolerance)
        .with("samples", reports.len())
        .with("failures", failures)
        .with("equalities", reports.iter().filter(|r| r.equality).count())
        .with("worst_relative_deficit", relative(worst));
    for (k, v) in &worst.metadata {
        out.set(&format!("worst.{k}"), v.clone());
    }
    out.and_require(failures == 0, "all_samples")
}

fn pick_dims(rng: &mut ChaCha8Rng, b: &MatrixBattery) -> usize {
    rng.gen_range(b.n_min..=b.n_max)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / scale_of(a, b)
}

fn subset_sigma(values: &[f64], k: usize) -> f64 {
    let n = values.len();
    (0u32..(1 << n))
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).map(|i| values[i]).product::<f64>())
        .sum()
}

/// Trace identities of the Newton tensors and `σ_k` against subset enumeration of the eigenvalues.
fn newton_identities(b: &MatrixBattery, seed: u64) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut trace_err, mut product_err, mut oracle_err) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..b.samples {
        let n = pick_dims(&mut rng, b);
        let a = random_symmetric(&mut rng, n);
        let ev = a.spectrum().eigenvalues;
        for k in 0..=n {
            let sk = elementary_symmetric(&a, k)?;
            oracle_err = oracle_err.max(rel_err(sk, subset_sigma(&ev, k)));
            if k < n {
                let t = newton_tensor(&a, k)?;
                let sk1 = elementary_symmetric(&a, k + 1)?;
                trace_err = trace_err.max(rel_err(t.trace(), (n - k) as f64 * sk));
                product_err = product_err.max(rel_err((t.matrix() * a.matrix()).trace(), (k + 1) as f64 * sk1));
            }
        }
    }
    let worst = trace_err.max(product_err).max(oracle_err);
    Ok(VerificationReport::residual("newton_identities", worst, IDENTITY_REL_TOL)
        .with("samples", b.samples)
        .with("trace_rel_err", trace_err)
        .with("product_rel_err", product_err)
        .with("subset_rel_err", oracle_err))
}

/// Runs the random battery, then requires the equality flag and a vanishing deficit on scalar inputs.
fn lemma_battery(
    check: &str,
    b: &MatrixBattery,
    seed: u64,
    sample: impl Fn(&mut ChaCha8Rng, usize) -> Result<VerificationReport>,
    scalar: impl Fn(usize) -> Result<Vec<VerificationReport>>,
) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::with_capacity(b.samples);
    for _ in 0..b.samples {
        let n = pick_dims(&mut rng, b);
        reports.push(sample(&mut rng, n)?);
    }
    let mut probes = Vec::new();
    for n in b.n_min..=b.n_max {
        probes.extend(scalar(n)?);
    }
    let detected = probes.iter().all(|r| r.equality && r.deficit.abs() <= r.tolerance);
    Ok(aggregate(check, &reports).with("equality_probes", probes.len()).and_require(detected, "equality_at_scalar_inputs"))
}

fn garding_battery(b: &MatrixBattery, seed: u64) -> Result<VerificationReport> {
    lemma_battery(
        "garding_inequality",
        b,
        seed,
        |rng, n| {
            let k = rng.gen_range(0..n);
            let a = random_in_cone(rng, n, k + 1);
            let bm = random_in_cone(rng, n, k + 1);
            symalg::check_garding_inequality(&a, &bm, k)
        },
        |n| (0..n).map(|k| symalg::check_garding_inequality(&SymMatrix::identity(n), &SymMatrix::scaled_identity(n, 2.5), k)).collect(),
    )
}

fn det_tk_battery(b: &MatrixBattery, seed: u64) -> Result<VerificationReport> {
    lemma_battery(
        "det_tk_lower_bound",
        b,
        seed,
        |rng, n| {
            let k = rng.gen_range(0..n);
            symalg::det_tk_lower_bound(&random_in_cone(rng, n, k + 1), k)
        },
        |n| (0..n).map(|k| symalg::det_tk_lower_bound(&SymMatrix::scaled_identity(n, 1.7), k)).collect(),
    )
}

fn amgm_battery(b: &MatrixBattery, seed: u64) -> Result<VerificationReport> {
    lemma_battery(
        "amgm_det_trace",
        b,
        seed,
        |rng, n| {
            let a = random_positive_definite(rng, n);
            symalg::amgm_det_trace(&a, &random_psd(rng, n))
        },
        |n| Ok(vec![symalg::amgm_det_trace(&SymMatrix::identity(n), &SymMatrix::scaled_identity(n, 0.8))?]),
    )
}

/// Pass/fail and the sign of the deficit are unchanged under `Σ → λΣ`.
fn scale_invariance(p: &ScaleInvarianceParams) -> Result<VerificationReport> {
    let base = surface(&p.surface, p.resolution)?;
    let r0 = quermass::check_quermass_main(&base, p.k)?;
    let mut stable = true;
    let mut worst_homogeneity = 0.0f64;
    let degree = (base.dim() * (base.dim() + 1)) as i32;
    for &lambda in &p.lambdas {
        let r = quermass::check_quermass_main(&base.scaled(lambda)?, p.k)?;
        stable &= r.pass == r0.pass && (r.deficit > 0.0) == (r0.deficit > 0.0);
        let predicted = r0.deficit * lambda.powi(degree);
        worst_homogeneity = worst_homogeneity.max((r.deficit - predicted).abs() / r.rhs.abs().max(1.0));
    }
    Ok(VerificationReport::residual("quermass_scale_invariance", worst_homogeneity, 1e-8)
        .with("base_deficit", r0.deficit)
        .with("base_pass", r0.pass)
        .with("lambdas", p.lambdas.clone())
        .and_require(stable, "pass_and_sign_stable"))
}

fn serre_random(p: &SerreRandomParams, seed: u64) -> Result<VerificationReport> {
    let d = EuclideanDomain::build(&p.domain, p.resolution)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reports = (0..p.samples)
        .map(|_| check_serre(&d, &FieldDescriptor::random_trig_gram(&mut rng, d.n, p.terms).instantiate(d.n)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate("serre:random_fields", &reports))
}

fn logsob_random(p: &RandomTrigParams, seed: u64) -> Result<VerificationReport> {
    let s = surface(&p.surface, p.resolution)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reports = (0..p.samples)
        .map(|_| {
            let f = random_positive_trig(&mut rng, s.ambient_dim(), p.terms, p.floor);
            logsob::logsob_deficit(&LogSobInput::new(&s, &f, p.variant)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate("logsob:random_trig", &reports).with("variant", p.variant.name()))
}

fn superadditivity(p: &SuperadditivityParams, seed: u64) -> Result<VerificationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reports = (0..p.samples)
        .map(|_| {
            let a = 10f64.powf(rng.gen_range(-6.0..1.0));
            let b = 10f64.powf(rng.gen_range(-6.0..1.0));
            logsob::superadditivity_check(a, b)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate("logsob:superadditivity", &reports))
}
