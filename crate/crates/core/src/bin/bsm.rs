//! Command-line front end: geometry and scene creation, filter design,
//! rendering, analysis and the simulation-study curves.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bsm::array::{rotate_array, semi_circular_preset, steering_matrix, wavenumber, ArrayGeometry, DEFAULT_MAX_ORDER};
use bsm::design::{
    check_generalization, design_filter_bank, frequency_grid, load_filter_bank, save_filter_bank, DesignSpec, FilterBank,
    FilterMode, OrderProbe, DEFAULT_SNR_THRESHOLD_DB,
};
use bsm::error::{Error, Result};
use bsm::hrtf::{resolve_hrtf_source, HrtfLookup, HrtfSet, DEFAULT_HEAD_RADIUS};
use bsm::linalg::{CMatrix, CVector};
use bsm::metrics::{
    effective_sh_order, estimate_ild, estimate_itd, ild_error, itd_error, magnitude_nmse, nmse, write_curves, Axis,
    MetricCurve, ITD_LOWPASS_HZ,
};
use bsm::render::{Renderer, DEFAULT_NFFT};
use bsm::reproduce::{reproduce, Figure, Study, StudyConfig, ROTATIONS_DEG};
use bsm::scene::{load_scene, simulate_array, simulate_reference_binaural};
use bsm::sh::{equal_angle_sampling, load_direction_set, spiral_sampling, DirectionSet, ShTransform};
use bsm::signal::{read_wav, write_wav, BinauralSignal, WavEncoding};

#[derive(Parser)]
#[command(name = "bsm", version, about = "Binaural signal matching for microphone arrays")]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[arg(long, short, global = true)]
    verbose: bool,
    /// Overrides the seed of simulated scenes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an array geometry file.
    Geometry(GeometryArgs),
    /// Simulate array recordings of a plane-wave scene.
    Simulate(SimulateArgs),
    /// Design a filter bank.
    Design(DesignArgs),
    /// Filter array recordings into a binaural signal.
    Render(RenderArgs),
    /// Evaluate filters or binaural signals.
    Analyze(AnalyzeArgs),
    /// Write the simulation-study curves as CSV.
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Six microphones on a 10 cm semicircle of a rigid sphere.
    Semi6,
}

#[derive(Args)]
struct ArraySource {
    /// Built-in array geometry.
    #[arg(long, conflicts_with = "geometry")]
    preset: Option<Preset>,
    /// Geometry JSON file.
    #[arg(long)]
    geometry: Option<PathBuf>,
}

impl ArraySource {
    fn resolve(&self) -> Result<ArrayGeometry> {
        match (&self.geometry, self.preset) {
            (Some(path), _) => ArrayGeometry::load(path),
            (None, _) => semi_circular_preset(6, 0.1),
        }
    }
}

#[derive(Args)]
struct GeometryArgs {
    #[arg(long, value_enum, default_value = "semi6")]
    preset: Preset,
    /// Number of microphones on the semicircle.
    #[arg(long, default_value_t = 6)]
    mics: usize,
    /// Semicircle radius in metres.
    #[arg(long, default_value_t = 0.1)]
    radius: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Encoding {
    F32,
    Pcm16,
    Pcm24,
}

impl From<Encoding> for WavEncoding {
    fn from(e: Encoding) -> Self {
        match e {
            Encoding::F32 => WavEncoding::Float32,
            Encoding::Pcm16 => WavEncoding::Pcm16,
            Encoding::Pcm24 => WavEncoding::Pcm24,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Scene JSON file.
    #[arg(long)]
    scene: PathBuf,
    #[command(flatten)]
    array: ArraySource,
    #[arg(long, default_value = "array.wav")]
    out: PathBuf,
    /// Also write the ideal binaural signal for this HRTF source.
    #[arg(long, requires = "reference_out")]
    reference_hrtf: Option<String>,
    #[arg(long)]
    reference_out: Option<PathBuf>,
    /// Head yaw of the reference in degrees.
    #[arg(long, default_value_t = 0.0)]
    rotate_head: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ORDER)]
    max_order: usize,
    #[arg(long, value_enum, default_value = "f32")]
    encoding: Encoding,
}

#[derive(Args)]
struct GridArgs {
    /// Design directions: `spiral:<Q>`, `equal-angle:<N>` or a table file.
    #[arg(long, default_value = "spiral:240")]
    directions: String,
    #[arg(long, default_value_t = 75.0)]
    fmin: f64,
    #[arg(long, default_value_t = 10000.0)]
    fmax: f64,
    #[arg(long, default_value_t = 75.0)]
    fstep: f64,
}

impl GridArgs {
    fn directions(&self) -> Result<DirectionSet> {
        parse_directions(&self.directions)
    }

    fn freqs(&self) -> Result<Vec<f64>> {
        if !(self.fstep > 0.0) || !(self.fmax >= self.fmin) || !(self.fmin >= 0.0) {
            return Err(Error::InvalidArgument("frequency grid needs 0 <= fmin <= fmax and fstep > 0".into()));
        }
        Ok(frequency_grid(self.fmin, self.fmax, self.fstep))
    }
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    array: ArraySource,
    /// `surrogate[:radius_m]` or an HRTF container directory.
    #[arg(long, default_value = "surrogate")]
    hrtf: String,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 20.0)]
    snr: f64,
    /// MagLS above this frequency; `inf` for complex least squares only.
    #[arg(long, default_value_t = 1500.0)]
    cutoff: f64,
    /// Head yaw compensated at playback, in degrees.
    #[arg(long, default_value_t = 0.0)]
    rotate_head: f64,
    /// Head elevation change compensated at playback, in degrees.
    #[arg(long, default_value_t = 0.0)]
    rotate_head_elevation: f64,
    /// Array yaw compensated at recording, in degrees.
    #[arg(long, default_value_t = 0.0)]
    rotate_array: f64,
    /// Disable the second MagLS run started from the least-squares phase.
    #[arg(long)]
    no_ls_warm_start: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_ORDER)]
    max_order: usize,
    /// Frequency of the generalization check (default: lower of cutoff and top frequency).
    #[arg(long)]
    check_freq: Option<f64>,
    #[arg(long, default_value = "filters")]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    /// Filter bank directory.
    #[arg(long)]
    filters: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_NFFT)]
    nfft: usize,
    #[arg(long, value_enum, default_value = "f32")]
    encoding: Encoding,
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    Nmse,
    Mag,
    Shorder,
    Itd,
    Ild,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(value_enum)]
    measure: Measure,
    /// Filter bank directory (nmse, mag).
    #[arg(long)]
    filters: Option<PathBuf>,
    #[arg(long, default_value = "surrogate")]
    hrtf: String,
    #[command(flatten)]
    array: ArraySource,
    #[command(flatten)]
    grid: GridArgs,
    /// Energy percentage for the effective order.
    #[arg(long, default_value_t = 99.0)]
    percent: f64,
    /// SH order of the effective-order analysis grid.
    #[arg(long, default_value_t = 30)]
    order: usize,
    /// Binaural WAV to analyse (itd, ild).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Reference binaural WAV; errors are reported when given.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    #[arg(long, default_value = "analysis.csv")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureArg {
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    All,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(value_enum)]
    figure: FigureArg,
    #[arg(long, default_value = "surrogate")]
    hrtf: String,
    /// Head rotations in degrees for figures 6 to 8.
    #[arg(long, value_delimiter = ',', default_values_t = ROTATIONS_DEG.to_vec())]
    rotations: Vec<f64>,
    #[arg(long, default_value = "figures")]
    out: PathBuf,
}

fn parse_directions(spec: &str) -> Result<DirectionSet> {
    let parse = |v: &str| v.parse::<usize>().map_err(|_| Error::InvalidArgument(format!("bad direction count in '{spec}'")));
    if let Some(n) = spec.strip_prefix("spiral:") {
        return Ok(spiral_sampling(parse(n)?));
    }
    if let Some(n) = spec.strip_prefix("equal-angle:") {
        return Ok(equal_angle_sampling(parse(n)?));
    }
    load_direction_set(Path::new(spec))
}

fn read_binaural(path: &Path) -> Result<BinauralSignal> {
    BinauralSignal::from_multichannel(&read_wav(path)?)
}

fn cmd_geometry(args: &GeometryArgs) -> Result<()> {
    let geom = match args.preset {
        Preset::Semi6 => semi_circular_preset(args.mics, args.radius)?,
    };
    geom.save(&args.out)?;
    println!("wrote {} ({} microphones)", args.out.display(), geom.num_mics());
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, seed: Option<u64>) -> Result<()> {
    let mut scene = load_scene(&args.scene)?;
    if let Some(s) = seed {
        scene.seed = s;
    }
    let geom = args.array.resolve()?;
    let x = simulate_array(&scene, &geom, args.max_order)?;
    write_wav(&args.out, &x, args.encoding.into())?;
    println!("wrote {} ({} channels, {} samples)", args.out.display(), x.num_channels(), x.len());
    if let (Some(src), Some(out)) = (&args.reference_hrtf, &args.reference_out) {
        let hrtf = resolve_hrtf_source(src, &spiral_sampling(240), &frequency_grid(75.0, 10000.0, 75.0))?;
        let p = simulate_reference_binaural(&scene, &hrtf, (0.0, args.rotate_head.to_radians()))?;
        write_wav(out, &p.to_multichannel(), args.encoding.into())?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn mode_summary(bank: &FilterBank) -> String {
    let ls = bank.count_mode(FilterMode::ComplexLs);
    let magls = bank.count_mode(FilterMode::Magls);
    let unconverged = bank.diagnostics.iter().filter(|d| d.iterations.iter().zip(&d.converged).any(|(&i, &c)| i > 0 && !c)).count();
    let truncated = bank.diagnostics.iter().filter(|d| d.truncation_warning).count();
    let mut s = format!("{} bins: {ls} complex LS, {magls} MagLS", bank.len());
    if let Some(k) = bank.modes.iter().position(|&m| m == FilterMode::Magls) {
        s.push_str(&format!(" (from {} Hz)", bank.freqs[k]));
    }
    if unconverged > 0 {
        s.push_str(&format!("; {unconverged} MagLS bins hit the iteration limit"));
    }
    if truncated > 0 {
        s.push_str(&format!("; {truncated} bins with series truncation warnings"));
    }
    s
}

fn cmd_design(args: &DesignArgs) -> Result<()> {
    let geom = args.array.resolve()?;
    let dirs = args.grid.directions()?;
    let freqs = args.grid.freqs()?;
    let hrtf = resolve_hrtf_source(&args.hrtf, &dirs, &freqs)?;
    let mut spec = DesignSpec::new(geom, dirs, freqs);
    spec.snr_db = args.snr;
    spec.cutoff_hz = args.cutoff;
    spec.rotation = (args.rotate_head_elevation.to_radians(), args.rotate_head.to_radians());
    spec.array_rotation = args.rotate_array.to_radians();
    spec.max_order = args.max_order;
    spec.magls.ls_warm_start = !args.no_ls_warm_start;
    let bank = design_filter_bank(&spec, &hrtf)?;
    save_filter_bank(&bank, &args.out)?;
    println!("wrote {}", args.out.display());
    println!("{}", mode_summary(&bank));

    let top = *spec.freqs.last().expect("nonempty grid");
    let f = args.check_freq.unwrap_or(if spec.cutoff_hz.is_finite() { spec.cutoff_hz.min(top) } else { top });
    let k = wavenumber(f);
    let atf_order = (k * spec.geom.max_radius()).ceil() as usize;
    let hrtf_order = (k * DEFAULT_HEAD_RADIUS).ceil() as usize;
    let probe_dirs = equal_angle_sampling(atf_order.max(hrtf_order) + 2);
    let probe = OrderProbe::from_models(&rotate_array(&spec.geom, spec.array_rotation), &hrtf, &probe_dirs, f, spec.max_order);
    let report = check_generalization(&spec, atf_order, hrtf_order, Some(&probe), DEFAULT_SNR_THRESHOLD_DB);
    print!("at {f} Hz, {report}");
    Ok(())
}

fn cmd_render(args: &RenderArgs) -> Result<()> {
    let bank = load_filter_bank(&args.filters)?;
    let x = read_wav(&args.input)?;
    let renderer = Renderer::from_bank(&bank, args.nfft, x.sample_rate)?;
    let p = renderer.render(&x)?;
    write_wav(&args.out, &p.to_multichannel(), args.encoding.into())?;
    println!("wrote {} ({} samples, latency {} samples)", args.out.display(), p.len(), renderer.latency());
    Ok(())
}

fn bank_error_curves(args: &AnalyzeArgs, magnitude: bool) -> Result<Vec<MetricCurve>> {
    let path = args.filters.as_ref().ok_or_else(|| Error::InvalidArgument("--filters is required".into()))?;
    let bank = load_filter_bank(path)?;
    let geom = rotate_array(&args.array.resolve()?, bank.meta.array_rotation);
    if geom.num_mics() != bank.num_mics() {
        return Err(Error::ChannelMismatch { expected: bank.num_mics(), found: geom.num_mics() });
    }
    let dirs = args.grid.directions()?;
    let hrtf = resolve_hrtf_source(&args.hrtf, &dirs, &bank.freqs)?;
    let lookup = HrtfLookup::new(&hrtf, &dirs, bank.meta.rotation);
    let (metric, measure): (&str, fn(&CMatrix, &CVector, &CVector, f64) -> Result<f64>) =
        if magnitude { ("mag_nmse_db", magnitude_nmse) } else { ("nmse_db", nmse) };
    let method = if bank.count_mode(FilterMode::Magls) > 0 { "bsm_magls" } else { "bsm" };
    let mut left = MetricCurve::new(Axis::FrequencyHz, metric, method);
    let mut right = MetricCurve::new(Axis::FrequencyHz, metric, method);
    for (k, &f) in bank.freqs.iter().enumerate() {
        let v = steering_matrix(&geom, &dirs, f, DEFAULT_MAX_ORDER).values;
        let (hl, hr) = lookup.at(f);
        left.push(f, measure(&v, &bank.left[k], &hl, bank.meta.snr_db).map_err(|e| e.at_frequency(f))?, Some("left"));
        right.push(f, measure(&v, &bank.right[k], &hr, bank.meta.snr_db).map_err(|e| e.at_frequency(f))?, Some("right"));
    }
    Ok(vec![left, right])
}

fn order_curves(args: &AnalyzeArgs) -> Result<Vec<MetricCurve>> {
    let freqs = args.grid.freqs()?;
    let grid = equal_angle_sampling(args.order);
    let hrtf: HrtfSet = resolve_hrtf_source(&args.hrtf, &grid, &freqs)?;
    let transform = ShTransform::new(&grid, args.order)?;
    let lookup = HrtfLookup::new(&hrtf, &grid, (0.0, 0.0));
    let mut left = MetricCurve::new(Axis::FrequencyHz, "b99", "hrtf");
    let mut right = MetricCurve::new(Axis::FrequencyHz, "b99", "hrtf");
    if args.percent != 99.0 {
        left.metric = format!("b{}", args.percent);
        right.metric = left.metric.clone();
    }
    for &f in &freqs {
        let (l, r) = lookup.at(f);
        let bl = effective_sh_order(&transform.forward(l.as_slice())?, args.percent).map_err(|e| e.at_frequency(f))?;
        let br = effective_sh_order(&transform.forward(r.as_slice())?, args.percent).map_err(|e| e.at_frequency(f))?;
        left.push(f, bl as f64, Some("left"));
        right.push(f, br as f64, Some("right"));
    }
    Ok(vec![left, right])
}

fn binaural_curves(args: &AnalyzeArgs, itd: bool) -> Result<Vec<MetricCurve>> {
    let path = args.input.as_ref().ok_or_else(|| Error::InvalidArgument("--in is required".into()))?;
    let p = read_binaural(path)?;
    let reference = args.reference.as_deref().map(read_binaural).transpose()?;
    if let Some(r) = &reference {
        if r.sample_rate != p.sample_rate {
            return Err(Error::SampleRateMismatch { expected: r.sample_rate, found: p.sample_rate });
        }
    }
    let curve = match (itd, &reference) {
        (true, None) => {
            let mut c = MetricCurve::new(Axis::AzimuthDeg, "itd_us", "signal");
            c.push(0.0, estimate_itd(&p, ITD_LOWPASS_HZ)? * 1e6, None);
            c
        }
        (true, Some(r)) => {
            let mut c = MetricCurve::new(Axis::AzimuthDeg, "itd_error_us", "signal");
            c.push(0.0, itd_error(&p, r)? * 1e6, None);
            c
        }
        (false, None) => {
            let est = estimate_ild(&p);
            let mut c = MetricCurve::new(Axis::FrequencyHz, "ild_db", "signal");
            for (fc, v) in est.centres.iter().zip(&est.bands_db) {
                c.push(*fc, *v, None);
            }
            c
        }
        (false, Some(r)) => {
            let mut c = MetricCurve::new(Axis::AzimuthDeg, "ild_error_db", "signal");
            c.push(0.0, ild_error(&p, r), None);
            c
        }
    };
    Ok(vec![curve])
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let curves = match args.measure {
        Measure::Nmse => bank_error_curves(args, false)?,
        Measure::Mag => bank_error_curves(args, true)?,
        Measure::Shorder => order_curves(args)?,
        Measure::Itd => binaural_curves(args, true)?,
        Measure::Ild => binaural_curves(args, false)?,
    };
    write_curves(&args.out, &curves)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_reproduce(args: &ReproduceArgs) -> Result<()> {
    let config = StudyConfig { hrtf_source: args.hrtf.clone(), ..StudyConfig::default() };
    let study = Study::new(config)?;
    let figures: Vec<Figure> = match args.figure {
        FigureArg::Fig4 => vec![Figure::Fig4],
        FigureArg::Fig5 => vec![Figure::Fig5],
        FigureArg::Fig6 => vec![Figure::Fig6],
        FigureArg::Fig7 => vec![Figure::Fig7],
        FigureArg::Fig8 => vec![Figure::Fig8],
        FigureArg::All => Figure::ALL.to_vec(),
    };
    for fig in figures {
        for path in reproduce(&study, fig, &args.rotations, &args.out)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Geometry(a) => cmd_geometry(a),
        Command::Simulate(a) => cmd_simulate(a, cli.seed),
        Command::Design(a) => cmd_design(a),
        Command::Render(a) => cmd_render(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Reproduce(a) => cmd_reproduce(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
