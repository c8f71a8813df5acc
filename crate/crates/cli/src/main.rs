//! Deterministic command-line front end for the conjstab library.
//!
//! Every subcommand both reports and verifies: it emits a machine-readable
//! record (canonical JSON by default: sorted keys, floats rounded to 12
//! significant digits) and exits 0 only if all of its assertions hold.
//! Failed assertions exit 1 with the failures listed in the record; bad
//! arguments exit 2; enumeration-budget refusals exit 3.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::Ratio;
use rand::Rng;
use rand::SeedableRng;
use serde_json::{Map, Number, Value};

use conjstab::affine_rep::AffineGroup;
use conjstab::agl2;
use conjstab::ff::{make_field, FieldCtx, MultiplicativeChar, Parity};
use conjstab::hsp::{
    brute_force_distribution, closed_form_distribution,
    conditional_row_fourier_distribution, recover_hidden_point, BorelPipeline, Branch,
    Distribution, HidingOracle, HspError, IrrepLabel,
};
use conjstab::pgroup::{Group, GroupError, GroupFlavor, ProjPoint};
use conjstab::tolerances;
use conjstab::transitivity::{Action, TransitivityError};

const ASSERT_TOL: f64 = tolerances::COMPLEX_EQ;

#[derive(Parser)]
#[command(
    name = "conjstab",
    version,
    about = "Build PGL/PSL/SL(2;q), verify their structure, and simulate hidden-stabilizer recovery"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Output format (csv only for `distribution`).
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report to a file instead of stdout. Relative paths are
    /// resolved under $CONJSTAB_OUTPUT_DIR when that is set.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(Subcommand)]
enum Cmd {
    /// Field construction and character sanity checks.
    FieldInfo {
        /// Field spec `p^n`, e.g. `7^1` or `3^2`.
        #[arg(long)]
        field: String,
    },
    /// Group orders and the Borel decomposition law.
    GroupInfo {
        #[arg(long)]
        flavor: String,
        #[arg(long)]
        field: String,
    },
    /// k-transitivity fractions of the projective-line action.
    Transitivity {
        #[arg(long)]
        flavor: String,
        #[arg(long)]
        field: String,
        #[arg(short, long)]
        k: usize,
        /// Assert the exact fraction b, written `num/den`.
        #[arg(long)]
        expect_b: Option<String>,
    },
    /// Residuals of the affine-group representation suite.
    RepCheck {
        #[arg(long)]
        field: String,
    },
    /// Quadratic Gauss sum value and its i^d classification.
    Gauss {
        #[arg(long)]
        field: String,
    },
    /// Closed-form vs brute-force measurement distributions.
    Distribution {
        #[arg(long)]
        flavor: String,
        #[arg(long)]
        field: String,
        /// Hidden finite point, as a packed field value.
        #[arg(long)]
        hidden: u32,
    },
    /// End-to-end recovery of a hidden stabilizer.
    Recover {
        #[arg(long)]
        flavor: String,
        #[arg(long)]
        field: String,
        /// Packed field value, `inf`, or `random`.
        #[arg(long)]
        hidden: String,
        /// Number of frequency samples (defaults to the Chernoff bound).
        #[arg(long)]
        samples: Option<u32>,
        /// RNG seed; required so every run is reproducible.
        #[arg(long)]
        seed: u64,
    },
    /// AGL(d;2) transitivity and stabilizer structure.
    Agl2Check {
        #[arg(short, long)]
        dim: usize,
    },
}

enum CliError {
    Parse(String),
    Budget(String),
    Run(String),
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        match e {
            GroupError::GroupTooLarge(_) => CliError::Budget(e.to_string()),
            GroupError::EvenCharacteristic => CliError::Parse(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<TransitivityError> for CliError {
    fn from(e: TransitivityError) -> Self {
        match e {
            TransitivityError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<agl2::Agl2Error> for CliError {
    fn from(e: agl2::Agl2Error) -> Self {
        match e {
            agl2::Agl2Error::DimensionTooLarge(_) => CliError::Budget(e.to_string()),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<HspError> for CliError {
    fn from(e: HspError) -> Self {
        match e {
            HspError::Group(g) => g.into(),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<conjstab::ff::FieldError> for CliError {
    fn from(e: conjstab::ff::FieldError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<conjstab::affine_rep::AffineRepError> for CliError {
    fn from(e: conjstab::affine_rep::AffineRepError) -> Self {
        CliError::Run(e.to_string())
    }
}

/// A rendered subcommand outcome: the JSON record, a plain-text rendering,
/// an optional CSV table, and the list of failed assertions.
struct Report {
    json: Map<String, Value>,
    pretty: String,
    csv: Option<String>,
    failures: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    let output = cli.output.clone();
    match dispatch(cli) {
        Ok(mut report) => {
            let code = if report.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) };
            report.json.insert(
                "status".into(),
                Value::String(if report.failures.is_empty() { "ok" } else { "fail" }.into()),
            );
            report.json.insert(
                "failures".into(),
                Value::Array(report.failures.iter().cloned().map(Value::String).collect()),
            );
            let body = match format {
                Format::Json => {
                    let mut s = serde_json::to_string(&Value::Object(report.json))
                        .expect("serializable report");
                    s.push('\n');
                    s
                }
                Format::Pretty => {
                    let mut s = report.pretty;
                    if !report.failures.is_empty() {
                        s.push_str("\nFAILED ASSERTIONS:\n");
                        for f in &report.failures {
                            s.push_str(&format!("  - {f}\n"));
                        }
                    }
                    s
                }
                Format::Csv => match report.csv {
                    Some(csv) => csv,
                    None => {
                        eprintln!("csv output is only available for `distribution`");
                        return ExitCode::from(2);
                    }
                },
            };
            if let Err(e) = emit(&body, output.as_deref()) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            code
        }
        Err(CliError::Parse(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn emit(body: &str, output: Option<&std::path::Path>) -> std::io::Result<()> {
    match output {
        None => {
            print!("{body}");
            Ok(())
        }
        Some(path) => {
            let resolved = if path.is_relative() {
                match std::env::var_os("CONJSTAB_OUTPUT_DIR") {
                    Some(dir) => PathBuf::from(dir).join(path),
                    None => path.to_path_buf(),
                }
            } else {
                path.to_path_buf()
            };
            if let Some(parent) = resolved.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(resolved, body)
        }
    }
}

fn dispatch(cli: Cli) -> Result<Report, CliError> {
    match cli.cmd {
        Cmd::FieldInfo { field } => field_info(&field),
        Cmd::GroupInfo { flavor, field } => group_info(&flavor, &field),
        Cmd::Transitivity { flavor, field, k, expect_b } => {
            transitivity_cmd(&flavor, &field, k, expect_b.as_deref())
        }
        Cmd::RepCheck { field } => rep_check(&field),
        Cmd::Gauss { field } => gauss_cmd(&field),
        Cmd::Distribution { flavor, field, hidden } => distribution_cmd(&flavor, &field, hidden),
        Cmd::Recover { flavor, field, hidden, samples, seed } => {
            recover_cmd(&flavor, &field, &hidden, samples, seed)
        }
        Cmd::Agl2Check { dim } => agl2_check(dim),
    }
}

// ---- shared helpers ----

fn parse_field_spec(spec: &str) -> Result<(u32, u32), CliError> {
    let (p, n) = match spec.split_once('^') {
        Some((p, n)) => (p, n),
        None => (spec, "1"),
    };
    let p: u32 = p
        .trim()
        .parse()
        .map_err(|_| CliError::Parse(format!("bad field spec `{spec}`: expected `p^n`")))?;
    let n: u32 = n
        .trim()
        .parse()
        .map_err(|_| CliError::Parse(format!("bad field spec `{spec}`: expected `p^n`")))?;
    Ok((p, n))
}

fn build_field(spec: &str) -> Result<FieldCtx, CliError> {
    let (p, n) = parse_field_spec(spec)?;
    make_field(p, n).map_err(|e| CliError::Parse(e.to_string()))
}

fn parse_flavor(s: &str) -> Result<GroupFlavor, CliError> {
    s.parse().map_err(CliError::Parse)
}

/// Rounds to 12 significant digits so repeated runs are byte-identical.
fn jf(x: f64) -> Value {
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float");
    Value::Number(Number::from_f64(rounded).expect("finite float"))
}

fn ju(x: u64) -> Value {
    Value::Number(Number::from(x))
}

fn ratio_string(r: Ratio<u64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn coords_json(dist: &Distribution, val: u32) -> Value {
    Value::Array(dist.coords(val).into_iter().map(|c| ju(c as u64)).collect())
}

fn dist_json(dist: &Distribution) -> Value {
    Value::Array(
        (0..dist.q())
            .map(|l| {
                let mut m = Map::new();
                m.insert("ell".into(), coords_json(dist, l));
                m.insert("p".into(), jf(dist.prob(l)));
                Value::Object(m)
            })
            .collect(),
    )
}

struct Checks {
    failures: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks { failures: Vec::new() }
    }

    fn assert(&mut self, ok: bool, what: &str) -> bool {
        if !ok {
            self.failures.push(what.to_string());
        }
        ok
    }

    fn assert_close(&mut self, got: f64, want: f64, tol: f64, what: &str) -> bool {
        self.assert((got - want).abs() < tol, &format!("{what}: got {got}, want {want}"))
    }

    fn assert_small(&mut self, got: f64, tol: f64, what: &str) -> bool {
        self.assert(got < tol, &format!("{what}: residual {got} exceeds {tol}"))
    }
}

fn projective_action(group: &Group<'_>) -> Result<Action<conjstab::pgroup::GroupElement, ProjPoint>, CliError> {
    let elements = group.enumerate()?;
    let domain = group.projective_line();
    let g = *group;
    Ok(Action::new(elements, domain, move |m, &x| {
        g.act(m, x).expect("same context")
    })?)
}

// ---- subcommands ----

fn field_info(spec: &str) -> Result<Report, CliError> {
    let f = build_field(spec)?;
    let mut checks = Checks::new();
    let q = f.q();

    let mut json = Map::new();
    json.insert("p".into(), ju(f.p() as u64));
    json.insert("n".into(), ju(f.n() as u64));
    json.insert("q".into(), ju(q as u64));
    json.insert(
        "modulus".into(),
        Value::Array(f.modulus().iter().map(|&c| ju(c as u64)).collect()),
    );
    json.insert(
        "generator".into(),
        Value::Array(f.coeffs(f.generator()).into_iter().map(|c| ju(c as u64)).collect()),
    );
    json.insert("generator_val".into(), ju(f.generator().val() as u64));

    // Character sanity at desk scale only; large fields skip the q^3 sums.
    if q <= 256 {
        let mut worst = 0.0f64;
        for k in f.frequencies() {
            for kp in f.frequencies() {
                let sum: num_complex::Complex64 = f
                    .elements()
                    .map(|j| f.additive_char(k, j) * f.additive_char(kp, j).conj())
                    .sum();
                let target = if k == kp { q as f64 } else { 0.0 };
                worst = worst.max((sum - target).norm());
            }
        }
        json.insert("character_orthogonality_residual".into(), jf(worst));
        checks.assert_small(worst, ASSERT_TOL, "additive character orthogonality");
        if f.odd() {
            let mut eta_ok = true;
            let mut squares = 0u32;
            for a in f.nonzero_elements() {
                if f.is_square(a) {
                    squares += 1;
                }
                for b in f.nonzero_elements() {
                    let ab = f.mul(a, b).expect("same context");
                    if f.quadratic_char(ab) != f.quadratic_char(a) * f.quadratic_char(b) {
                        eta_ok = false;
                    }
                }
            }
            json.insert("eta_multiplicative".into(), Value::Bool(eta_ok));
            json.insert("nonzero_squares".into(), ju(squares as u64));
            checks.assert(eta_ok, "quadratic character multiplicativity");
            checks.assert(
                squares == (q - 1) / 2,
                &format!("square count: got {squares}, want {}", (q - 1) / 2),
            );
        }
    }

    let mod_str: Vec<String> = f.modulus().iter().map(|c| c.to_string()).collect();
    let pretty = format!(
        "field F_{q} = F_{}^{}\n  modulus coefficients (x^0..x^n): [{}]\n  generator: {:?} (packed {})\n",
        f.p(),
        f.n(),
        mod_str.join(", "),
        f.coeffs(f.generator()),
        f.generator().val()
    );
    Ok(Report { json, pretty, csv: None, failures: checks.failures })
}

fn group_info(flavor: &str, spec: &str) -> Result<Report, CliError> {
    let flavor = parse_flavor(flavor)?;
    let f = build_field(spec)?;
    let group = Group::new(flavor, &f)?;
    let mut checks = Checks::new();

    let formula = group.order();
    let enumerated = group.enumerate()?.len() as u64;
    checks.assert(
        formula == enumerated,
        &format!("order: formula {formula}, enumerated {enumerated}"),
    );

    let borel = group.borel()?;
    let q = f.q() as u64;
    let expected_borel = match flavor {
        GroupFlavor::Gl => q * (q - 1) * (q - 1),
        GroupFlavor::Sl | GroupFlavor::Pgl => q * (q - 1),
        GroupFlavor::Psl => q * (q - 1) / 2,
    };
    checks.assert(
        borel.len() as u64 == expected_borel,
        &format!("borel order: got {}, want {expected_borel}", borel.len()),
    );

    // Decomposition law: affine composition mirrors matrix multiplication.
    let mut decompose_ok = true;
    let mut image = std::collections::BTreeSet::new();
    if flavor != GroupFlavor::Gl {
        let aff = AffineGroup::new(&f)?;
        for g in borel.elements() {
            let dg = group.decompose_borel(g)?;
            image.insert((dg.a.val(), dg.b.val()));
            for h in borel.elements() {
                let dh = group.decompose_borel(h)?;
                let dgh = group.decompose_borel(&group.mul(g, h)?)?;
                if aff.compose(dg, dh) != dgh {
                    decompose_ok = false;
                }
            }
        }
        checks.assert(decompose_ok, "borel decomposition homomorphism");
        let expected_image = match flavor {
            GroupFlavor::Pgl => q * (q - 1),
            _ => q * (q - 1) / 2,
        };
        checks.assert(
            image.len() as u64 == expected_image,
            &format!("decomposition image size: got {}, want {expected_image}", image.len()),
        );
    }

    let element_json = |g: &conjstab::pgroup::GroupElement| {
        let mut m = Map::new();
        m.insert("flavor".into(), Value::String(g.flavor().to_string()));
        m.insert(
            "entries".into(),
            Value::Array(
                g.entries()
                    .iter()
                    .map(|e| {
                        Value::Array(f.coeffs(*e).into_iter().map(|c| ju(c as u64)).collect())
                    })
                    .collect(),
            ),
        );
        Value::Object(m)
    };

    let mut json = Map::new();
    json.insert("flavor".into(), Value::String(flavor.to_string()));
    json.insert("q".into(), ju(q));
    json.insert("order_formula".into(), ju(formula));
    json.insert("order_enumerated".into(), ju(enumerated));
    json.insert("weyl".into(), element_json(&group.weyl()));
    json.insert(
        "borel_generators".into(),
        Value::Array(group.borel_generators()?.iter().map(element_json).collect()),
    );
    let mut borel_json = Map::new();
    borel_json.insert("order".into(), ju(borel.len() as u64));
    if flavor != GroupFlavor::Gl {
        borel_json.insert("decompose_homomorphism_ok".into(), Value::Bool(decompose_ok));
        borel_json.insert("decompose_image_size".into(), ju(image.len() as u64));
    }
    json.insert("borel".into(), Value::Object(borel_json));

    let pretty = format!(
        "{flavor}(2;{q})\n  order = {formula} (enumerated {enumerated})\n  |B| = {}\n",
        borel.len()
    );
    Ok(Report { json, pretty, csv: None, failures: checks.failures })
}

fn transitivity_cmd(
    flavor: &str,
    spec: &str,
    k: usize,
    expect_b: Option<&str>,
) -> Result<Report, CliError> {
    let flavor = parse_flavor(flavor)?;
    let f = build_field(spec)?;
    let group = Group::new(flavor, &f)?;
    let action = projective_action(&group)?;
    let report = action.transitivity_fraction(k)?;
    let mut checks = Checks::new();
    let covered: u64 = report.orbit_sizes.iter().sum();
    checks.assert(
        covered == report.tuple_count,
        &format!("orbits partition the tuples: {covered} vs {}", report.tuple_count),
    );
    // At k = 3 the almost-transitivity structure is what licenses the oracle
    // restriction, so also report whether two-point stabilizers through
    // infinity stay distinct.
    let distinctness = if k == 3 {
        Some(action.verify_distinctness(&ProjPoint::Infinity)?)
    } else {
        None
    };
    if let Some(d) = &distinctness {
        if d.precondition_met {
            checks.assert(
                d.holds == Some(true),
                &format!("two-point stabilizers through infinity distinct (witness {:?})", d.witness),
            );
        }
    }
    if let Some(expect) = expect_b {
        let parsed: Vec<u64> = expect
            .split('/')
            .map(|x| x.parse().map_err(|_| CliError::Parse(format!("bad fraction `{expect}`"))))
            .collect::<Result<_, _>>()?;
        if parsed.len() != 2 || parsed[1] == 0 {
            return Err(CliError::Parse(format!("bad fraction `{expect}`")));
        }
        let want = Ratio::new(parsed[0], parsed[1]);
        checks.assert(
            report.b == want,
            &format!("b: got {}, want {}", ratio_string(report.b), ratio_string(want)),
        );
    }

    let mut json = Map::new();
    json.insert("flavor".into(), Value::String(flavor.to_string()));
    json.insert("q".into(), ju(f.q() as u64));
    json.insert("k".into(), ju(k as u64));
    json.insert("b".into(), Value::String(ratio_string(report.b)));
    json.insert(
        "fraction_reached".into(),
        Value::String(ratio_string(report.fraction_reached)),
    );
    json.insert("is_k_transitive".into(), Value::Bool(report.is_k_transitive));
    json.insert("orbit_count".into(), ju(report.orbit_count as u64));
    json.insert("tuple_count".into(), ju(report.tuple_count));
    if let Some(d) = &distinctness {
        let mut m = Map::new();
        m.insert("precondition_met".into(), Value::Bool(d.precondition_met));
        match d.holds {
            Some(h) => m.insert("holds".into(), Value::Bool(h)),
            None => m.insert("holds".into(), Value::Null),
        };
        m.insert(
            "witness".into(),
            match &d.witness {
                None => Value::Null,
                Some((a, b)) => Value::String(format!("{a:?} vs {b:?}")),
            },
        );
        json.insert("two_point_stabilizer_distinctness".into(), Value::Object(m));
    }

    let pretty = format!(
        "{flavor}(2;{}) acting on PF_q, k = {k}\n  b = {}\n  {}-transitive: {}\n  orbits: {}\n",
        f.q(),
        ratio_string(report.b),
        k,
        report.is_k_transitive,
        report.orbit_count
    );
    Ok(Report { json, pretty, csv: None, failures: checks.failures })
}

fn rep_check(spec: &str) -> Result<Report, CliError> {
    let f = build_field(spec)?;
    let aff = AffineGroup::new(&f)?;
    let mut checks = Checks::new();

    let elements = aff.enumerate();
    // Exhaustive pairs at desk scale, seeded sample above.
    let pairs: Vec<_> = if elements.len() <= 100 {
        let mut pairs = Vec::with_capacity(elements.len() * elements.len());
        for &g in &elements {
            for &h in &elements {
                pairs.push((g, h));
            }
        }
        pairs
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        (0..2000)
            .map(|_| {
                (
                    elements[rng.gen_range(0..elements.len())],
                    elements[rng.gen_range(0..elements.len())],
                )
            })
            .collect()
    };
    let hom = aff.homomorphism_residual(&pairs);
    let unitarity = aff.unitarity_residual();
    let char_norm = aff.character_norm();
    let irre = (char_norm - aff.order() as f64).abs();
    let table = aff.character_table_residual();
    checks.assert_small(hom, ASSERT_TOL, "rho homomorphism");
    checks.assert_small(unitarity, ASSERT_TOL, "rho unitarity");
    checks.assert_small(irre, tolerances::CHARACTER_NORM, "rho irreducibility (character norm)");
    checks.assert_small(table, tolerances::CHARACTER_NORM, "character table orthogonality");

    // Projector closed form vs direct averaging, every b.
    let mut projector_worst = 0.0f64;
    for b in f.elements() {
        let formula = aff.full_stabilizer_projector(b);
        let direct = aff.average_rho(&aff.full_stabilizer(b));
        projector_worst = projector_worst.max(formula.max_abs_diff(&direct));
    }
    checks.assert_small(projector_worst, ASSERT_TOL, "full-stabilizer projector formula");

    // Squares-subgroup mixed state vs direct averaging, every b.
    let a = f.pow(f.generator(), 2);
    let mut mixed_worst = 0.0f64;
    for b in f.elements() {
        let ms = aff.psl_mixed_state(a, b)?;
        mixed_worst = mixed_worst.max(ms.proportionality_residual);
    }
    checks.assert_small(mixed_worst, ASSERT_TOL, "squares-subgroup mixed state");

    // The stacked-irrep Fourier layer is unitary (Schur completeness).
    let pgl = Group::new(GroupFlavor::Pgl, &f)?;
    let fourier = BorelPipeline::new(pgl)?.fourier_unitarity_residual();
    checks.assert_small(fourier, ASSERT_TOL, "Fourier layer unitarity");

    // A sample irrep matrix, row-major [re, im] pairs, for downstream diffing.
    let sample = aff.element(f.generator(), f.one())?;
    let rho_sample = aff.rho(sample);
    let mut flat = Vec::new();
    for r in 0..rho_sample.dim() {
        for c in 0..rho_sample.dim() {
            let v = rho_sample.get(r, c);
            flat.push(Value::Array(vec![jf(v.re), jf(v.im)]));
        }
    }

    let mut json = Map::new();
    json.insert("q".into(), ju(f.q() as u64));
    json.insert("rho_sample_element".into(), Value::String("(a,b) = (generator, 1)".into()));
    json.insert("rho_sample".into(), Value::Array(flat));
    json.insert("homomorphism_residual".into(), jf(hom));
    json.insert("homomorphism_pairs".into(), ju(pairs.len() as u64));
    json.insert("unitarity_residual".into(), jf(unitarity));
    json.insert("character_norm".into(), jf(char_norm));
    json.insert("irreducibility_residual".into(), jf(irre));
    json.insert("character_table_residual".into(), jf(table));
    json.insert("projector_residual".into(), jf(projector_worst));
    json.insert("mixed_state_residual".into(), jf(mixed_worst));
    json.insert("fourier_unitarity_residual".into(), jf(fourier));

    let pretty = format!(
        "AGL(1;{}) representation suite\n  homomorphism residual: {hom:.3e} ({} pairs)\n  unitarity residual: {unitarity:.3e}\n  character norm: {char_norm:.6} (|B| = {})\n  projector residual: {projector_worst:.3e}\n  mixed-state residual: {mixed_worst:.3e}\n  Fourier unitarity: {fourier:.3e}\n",
        f.q(),
        pairs.len(),
        aff.order()
    );
    Ok(Report { json, pretty, csv: None, failures: checks.failures })
}

fn gauss_cmd(spec: &str) -> Result<Report, CliError> {
    let f = build_field(spec)?;
    if !f.odd() {
        return Err(CliError::Parse("the quadratic Gauss sum requires odd q".into()));
    }
    let mut checks = Checks::new();
    let q = f.q();
    let g1 = f.gauss_sum(MultiplicativeChar::Quadratic, f.frequency_from_val(1)?);
    checks.assert_close(g1.modulus_sq, q as f64, ASSERT_TOL, "|G(eta, chi_1)|^2 = q");
    let d = g1.d.expect("nonzero frequency quadratic sum carries d");
    let reconstructed = num_complex::Complex64::from_polar(
        (q as f64).sqrt(),
        std::f64::consts::TAU * d as f64 / 4.0,
    );
    checks.assert_small(
        (g1.value - reconstructed).norm(),
        ASSERT_TOL,
        "value lies in {i^d sqrt q}",
    );
    let parity = g1.d_parity().expect("defined for nonzero frequency");
    let expect_odd = q % 4 == 3;
    checks.assert(
        (parity == Parity::Odd) == expect_odd,
        &format!("d parity rule: d = {d}, q mod 4 = {}", q % 4),
    );
    // Trivial-character sums collapse to q - 1 and -1.
    let mut trivial_ok = true;
    for k in f.frequencies() {
        let g = f.gauss_sum(MultiplicativeChar::Trivial, k);
        let target = if k.is_zero() { (q - 1) as f64 } else { -1.0 };
        if (g.value - target).norm() > ASSERT_TOL {
            trivial_ok = false;
        }
    }
    checks.assert(trivial_ok, "trivial-character geometric sums");

    let mut json = Map::new();
    json.insert("q".into(), ju(q as u64));
    json.insert("value_re".into(), jf(g1.value.re));
    json.insert("value_im".into(), jf(g1.value.im));
    json.insert("modulus_sq".into(), jf(g1.modulus_sq));
    json.insert("d".into(), ju(d as u64));
    json.insert(
        "d_parity".into(),
        Value::String(if parity == Parity::Odd { "odd" } else { "even" }.into()),
    );

    let pretty = format!(
        "G(eta, chi_1) over F_{q}\n  value = {:.9} + {:.9}i\n  |value|^2 = {:.9}\n  d = {d} ({})\n",
        g1.value.re,
        g1.value.im,
        g1.modulus_sq,
        if parity == Parity::Odd { "odd" } else { "even" }
    );
    Ok(Report { json, pretty, csv: None, failures: checks.failures })
}

fn distribution_cmd(flavor: &str, spec: &str, hidden: u32) -> Result<Report, CliError> {
    let flavor = parse_flavor(flavor)?;
    if flavor == GroupFlavor::Gl {
        return Err(CliError::Parse("the measurement pipeline covers pgl/sl/psl".into()));
    }
    let f = build_field(spec)?;
    let group = Group::new(flavor, &f)?;
    let b = f
        .element_from_val(hidden)
        .map_err(|e| CliError::Parse(e.to_string()))?;
    let mut checks = Checks::new();

    let report = brute_force_distribution(&group, b)?;
    let expected_rho = 1.0 - 1.0 / f.q() as f64;
    checks.assert_close(report.rho_mass, expected_rho, ASSERT_TOL, "weak-measurement rho mass");

    let mut branches_json = Vec::new();
    let mut csv = String::from("branch,ell,p_brute,p_closed\n");
    let mut overall_match = true;
    for (branch, dist) in &report.branches {
        checks.assert(
            dist.is_normalized(),
            &format!("branch {branch} distribution normalization"),
        );
        let closed = closed_form_distribution(&group, b, *branch)?;
        let diff = dist.max_abs_diff(&closed);
        let matched = diff < ASSERT_TOL;
        overall_match &= matched;
        checks.assert(matched, &format!("branch {branch}: brute vs closed diff {diff:.3e}"));
        // The mid-level row-vector route must agree as well.
        let column = match branch {
            Branch::Full => f.one(),
            Branch::Plus => f
                .nonzero_elements()
                .find(|&k| f.is_square(k))
                .expect("squares exist"),
            Branch::Minus => f
                .nonzero_elements()
                .find(|&k| !f.is_square(k))
                .expect("non-squares exist"),
        };
        let mid = conditional_row_fourier_distribution(&group, b, column)?;
        let mid_diff = mid.max_abs_diff(&closed);
        checks.assert(
            mid_diff < ASSERT_TOL,
            &format!("branch {branch}: row-Fourier vs closed diff {mid_diff:.3e}"),
        );

        let mut m = Map::new();
        m.insert("branch".into(), Value::String(branch.to_string()));
        m.insert("distribution".into(), dist_json(dist));
        m.insert("closed_form".into(), dist_json(&closed));
        m.insert("max_abs_diff".into(), jf(diff));
        m.insert("match".into(), Value::Bool(matched));
        branches_json.push(Value::Object(m));
        for l in 0..dist.q() {
            csv.push_str(&format!(
                "{branch},{},{:.12e},{:.12e}\n",
                dist.coords(l)
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(" "),
                dist.prob(l),
                closed.prob(l)
            ));
        }
    }

    let mut weak_json = Map::new();
    for (label, p) in &report.weak {
        let name = match label {
            IrrepLabel::Rho => "rho".to_string(),
            IrrepLabel::Character(0) => "trivial".to_string(),
            IrrepLabel::Character(t) if *t == (f.q() - 1) / 2 => "sign".to_string(),
            IrrepLabel::Character(t) => format!("chi_{t}"),
        };
        weak_json.insert(name, jf(*p));
    }

    let mut json = Map::new();
    json.insert("flavor".into(), Value::String(flavor.to_string()));
    json.insert("q".into(), ju(f.q() as u64));
    json.insert("hidden_point".into(), ju(hidden as u64));
    json.insert("weak".into(), Value::Object(weak_json));
    json.insert("branches".into(), Value::Array(branches_json));
    // Branch mixture weighted by measured mass: the per-sample law.
    json.insert("distribution".into(), dist_json(&report.merged()));
    json.insert("closed_form_match".into(), Value::Bool(overall_match));

    let (peak_val, peak_p) = report.branches[0].1.peak();
    let pretty = format!(
        "{flavor}(2;{}) hidden point {hidden}\n  P(rho) = {:.9}\n  peak: l = {peak_val} with P = {:.9}\n  closed-form match: {overall_match}\n",
        f.q(),
        report.rho_mass,
        peak_p
    );
    Ok(Report { json, pretty, csv: Some(csv), failures: checks.failures })
}

fn recover_cmd(
    flavor: &str,
    spec: &str,
    hidden: &str,
    samples: Option<u32>,
    seed: u64,
) -> Result<Report, CliError> {
    let flavor = parse_flavor(flavor)?;
    if flavor == GroupFlavor::Gl {
        return Err(CliError::Parse("the measurement pipeline covers pgl/sl/psl".into()));
    }
    let f = build_field(spec)?;
    let group = Group::new(flavor, &f)?;
    let hidden_point = match hidden {
        "inf" => ProjPoint::Infinity,
        "random" => {
            // Derived stream so the sampling seed stays untouched.
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
            let v = rng.gen_range(0..=f.q());
            if v == f.q() {
                ProjPoint::Infinity
            } else {
                group.finite_point(v)?
            }
        }
        other => {
            let v: u32 = other
                .parse()
                .map_err(|_| CliError::Parse(format!("bad hidden point `{other}`")))?;
            group.finite_point(v).map_err(|e| CliError::Parse(e.to_string()))?
        }
    };
    let mut checks = Checks::new();
    let oracle = HidingOracle::make_stabilizer_oracle(&group, hidden_point)?;
    let result = recover_hidden_point(&group, &oracle, samples, seed)?;
    checks.assert(
        result.recovered == hidden_point,
        &format!("recovered {:?}, hid {:?}", result.recovered, hidden_point),
    );

    let point_str = |p: ProjPoint| match p {
        ProjPoint::Infinity => "inf".to_string(),
        ProjPoint::Finite(e) => e.val().to_string(),
    };
    let mut json = Map::new();
    json.insert("flavor".into(), Value::String(flavor.to_string()));
    json.insert("q".into(), ju(f.q() as u64));
    json.insert("hidden_point".into(), Value::String(point_str(hidden_point)));
    json.insert("recovered".into(), Value::String(point_str(result.recovered)));
    json.insert("match".into(), Value::Bool(result.recovered == hidden_point));
    json.insert("samples".into(), ju(result.samples as u64));
    json.insert("seed".into(), ju(seed));
    json.insert("confidence".into(), jf(result.confidence));
    json.insert("oracle_queries".into(), ju(result.oracle_queries as u64));
    json.insert(
        "histogram".into(),
        Value::Array(
            result
                .histogram
                .iter()
                .map(|(&l, &c)| {
                    let mut m = Map::new();
                    m.insert("ell".into(), ju(l as u64));
                    m.insert("count".into(), ju(c as u64));
                    Value::Object(m)
                })
                .collect(),
        ),
    );

    let pretty = format!(
        "{flavor}(2;{}) recovery, seed {seed}\n  hidden: {}\n  recovered: {} ({} samples, confidence {:.6})\n",
        f.q(),
        point_str(hidden_point),
        point_str(result.recovered),
        result.samples,
        result.confidence
    );
    Ok(Report { json, pretty, csv: None, failures: checks.failures })
}

fn agl2_check(dim: usize) -> Result<Report, CliError> {
    let mut checks = Checks::new();
    let report = agl2::transitivity_report(dim, 3.min(1 << dim))?;
    let agl_order = agl2::agl_order(dim);
    let enumerated = agl2::enumerate_agl(dim)?.len() as u64;
    checks.assert(
        agl_order == enumerated,
        &format!("order: formula {agl_order}, enumerated {enumerated}"),
    );
    checks.assert(report.is_k_transitive, "3-transitivity on F_2^d");

    let mut json = Map::new();
    json.insert("dim".into(), ju(dim as u64));
    json.insert("agl_order".into(), ju(agl_order));
    json.insert("gl_order".into(), ju(agl2::gl_order(dim)));
    json.insert("is_3_transitive".into(), Value::Bool(report.is_k_transitive));
    json.insert("b".into(), Value::String(ratio_string(report.b)));
    json.insert("orbit_count".into(), ju(report.orbit_count as u64));
    json.insert("tuple_count".into(), ju(report.tuple_count));

    let mut pretty = format!(
        "AGL({dim};2)\n  order = {agl_order}\n  3-transitive: {}\n",
        report.is_k_transitive
    );

    if dim >= 2 {
        let stab = agl2::point1_stabilizer_structure(dim)?;
        checks.assert(stab.order_matches, "stabilizer order = |AGL(d-1;2)|");
        checks.assert(stab.block_form_ok, "stabilizer block form");
        checks.assert(stab.bijective, "transposed embedding bijective");
        checks.assert(stab.homomorphism_ok, "transposed embedding homomorphism");
        let mut s = Map::new();
        s.insert("order".into(), ju(stab.stabilizer_order));
        s.insert("expected_order".into(), ju(stab.expected_order));
        s.insert("block_form_ok".into(), Value::Bool(stab.block_form_ok));
        s.insert("bijective".into(), Value::Bool(stab.bijective));
        s.insert("homomorphism_ok".into(), Value::Bool(stab.homomorphism_ok));
        json.insert("stabilizer".into(), Value::Object(s));
        pretty.push_str(&format!(
            "  stabilizer of e_d in GL({dim};2): order {} (= |AGL({};2)| {})\n",
            stab.stabilizer_order,
            dim - 1,
            stab.expected_order
        ));
    }

    Ok(Report { json, pretty, csv: None, failures: checks.failures })
}
