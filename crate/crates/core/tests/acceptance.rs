//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Tolerances are the contract; do not loosen them here.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use specmap::assessment::{
    build_confusion, chance_agreement, kappa, overall_accuracy, percent_matrix, ConfusionMatrix,
};
use specmap::classifiers::{
    classify_image, classify_mahalanobis, classify_maxlike, classify_mindist, classify_mlp,
    classify_parallelepiped, classify_sam, train_mlp, write_model, Classifier, ClassifierConfig,
    Method, MlpHyper,
};
use specmap::raster_io::{
    read_bsq, read_layout, read_map, write_bsq, write_layout, write_map, BandStack, BsqFile,
    ClassInfo, ClassificationMap, RasterLayout, TrainingRegions,
};
use specmap::signatures::{extract_signatures, write_signatures, ClassSignature, SignatureSet};
use specmap::synthesis::{generate_scene, Rect, SceneClass, SceneSpec};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn reference_matrix() -> ConfusionMatrix {
    ConfusionMatrix::from_counts(vec![
        vec![136, 5, 2],
        vec![65367, 1, 0],
        vec![0, 1514, 0],
        vec![0, 0, 1022],
    ])
    .unwrap()
}

fn error_matrix_golden() -> Outcome {
    let cm = reference_matrix();
    // Hand derivation of chance agreement from the matched marginals; the
    // unclassified row contributes to N only.
    let n = 68047.0_f64;
    let pe_hand = (65368.0 * 65503.0 + 1514.0 * 1520.0 + 1022.0 * 1024.0) / (n * n);
    let pe = chance_agreement(&cm).map_err(|e| e.to_string())?;
    ensure((pe - pe_hand).abs() < 1e-12, format!("p_e {pe} vs hand {pe_hand}"))?;
    ensure((pe - 0.92544).abs() < 1e-5, format!("p_e {pe} not ~0.92544"))?;
    let oa = overall_accuracy(&cm).map_err(|e| e.to_string())?;
    let k = kappa(&cm).map_err(|e| e.to_string())?;
    ensure(cm.hits() == 67903 && cm.grand_total() == 68047, "hits/total")?;
    ensure((oa - 0.997884).abs() <= 1e-6, format!("OA {oa}"))?;
    ensure((k - 0.9716).abs() <= 1e-4, format!("kappa {k}"))?;
    Ok(format!("OA={oa:.6} kappa={k:.4} p_e={pe:.6}"))
}

fn percent_matrix_golden() -> Outcome {
    let pm = percent_matrix(&reference_matrix()).map_err(|e| e.to_string())?;
    let checks = [
        ("class-1 producer", pm.cells[1][0], 99.79),
        ("class-2 diagonal", pm.cells[2][1], 99.61),
        ("class-3 diagonal", pm.cells[3][2], 99.80),
        ("class-1 row total", pm.row_totals[1], 96.06),
        ("class-2 row total", pm.row_totals[2], 2.22),
        ("class-3 row total", pm.row_totals[3], 1.50),
    ];
    for (what, got, want) in checks {
        ensure((got - want).abs() <= 0.01, format!("{what}: {got:.4} vs {want}"))?;
    }
    Ok(checks
        .iter()
        .map(|(_, g, _)| format!("{g:.2}"))
        .collect::<Vec<_>>()
        .join(" "))
}

const FRAMED_SIDECAR: &str = "\
# framing of the 4-band scene
file_header_bytes: 540
line_prefix_bytes: 32
line_suffix_bytes: 0
scan_lines: 5545
pixels_per_line: 5918
bands: 4
bytes_per_pixel: 1
";

fn framed_layout(dir: &Path) -> Outcome {
    let layout = RasterLayout::parse(FRAMED_SIDECAR, "framed").map_err(|e| e.to_string())?;
    ensure(layout.record_length() == 5950, format!("record length {}", layout.record_length()))?;
    ensure(
        layout.expected_file_size() == 131_971_540,
        format!("file size {}", layout.expected_file_size()),
    )?;

    // Full-size file: zero framing with a few marker samples written in.
    let path = dir.join("framed.bsq");
    {
        use std::io::{Seek, SeekFrom, Write};
        let mut f = std::fs::File::create(&path).map_err(|e| e.to_string())?;
        f.set_len(131_971_540).map_err(|e| e.to_string())?;
        let last_line = (4 * 5545 - 1) as u64;
        for (line, value) in [(0u64, 7u8), (last_line, 9u8)] {
            f.seek(SeekFrom::Start(540 + line * 5950 + 32)).map_err(|e| e.to_string())?;
            f.write_all(&[value]).map_err(|e| e.to_string())?;
        }
    }
    let mut file = BsqFile::open(&path, &layout).map_err(|e| e.to_string())?;
    let first = file.read_line(0, 0).map_err(|e| e.to_string())?;
    let last = file.read_line(3, 5544).map_err(|e| e.to_string())?;
    ensure(first.len() == 5918 && first[0] == 7.0 && first[1] == 0.0, "first line payload")?;
    ensure(last[0] == 9.0, "last line payload")?;

    let short = dir.join("framed_short.bsq");
    std::fs::File::create(&short)
        .and_then(|f| f.set_len(131_971_539))
        .map_err(|e| e.to_string())?;
    ensure(BsqFile::open(&short, &layout).is_err(), "truncated file accepted by BsqFile")?;
    ensure(read_bsq(&short, &layout).is_err(), "truncated file accepted by read_bsq")?;

    // Same framing at small scale through the whole-file decoder.
    let mut small = layout;
    small.scan_lines = 3;
    small.pixels_per_line = 5;
    let stack = BandStack::new(4, 3, 5, (0..60).map(f64::from).collect()).unwrap();
    let small_path = dir.join("small.bsq");
    write_bsq(&small_path, &stack, &small).map_err(|e| e.to_string())?;
    let back = read_bsq(&small_path, &small).map_err(|e| e.to_string())?;
    ensure(back == stack, "framed small raster round trip")?;
    Ok("record_length=5950 size=131971540, full-size file opens, truncated errors".into())
}

fn signature(id: u32, mean: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>, cov: DMatrix<f64>) -> ClassSignature {
    ClassSignature {
        class_id: id,
        name: format!("c{id}"),
        color: [0; 3],
        count: 30,
        mean,
        covariance: cov,
        band_min: lo,
        band_max: hi,
    }
}

fn random_spd(rng: &mut ChaCha8Rng, b: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(b, b, |_, _| rng.random_range(-3.0..3.0));
    &a * a.transpose() + DMatrix::identity(b, b) * 0.5
}

/// Random signatures with boxes around the means; every class shares `cov`.
fn random_set(rng: &mut ChaCha8Rng, k: usize, b: usize, cov: &DMatrix<f64>) -> SignatureSet {
    let sigs = (1..=k as u32)
        .map(|id| {
            let mean: Vec<f64> = (0..b).map(|_| rng.random_range(10.0..240.0)).collect();
            let lo: Vec<f64> = mean.iter().map(|m| m - rng.random_range(1.0..40.0)).collect();
            let hi: Vec<f64> = mean.iter().map(|m| m + rng.random_range(1.0..40.0)).collect();
            signature(id, mean, lo, hi, cov.clone())
        })
        .collect();
    let mut set = SignatureSet::new(sigs).unwrap();
    set.pooled_covariance = Some(cov.clone());
    set
}

fn cross_classifier_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = ClassifierConfig::default();
    let mut violations = [0usize; 4];
    for _ in 0..1000 {
        let k = rng.random_range(1..=5);
        let b = rng.random_range(1..=6);
        let x: Vec<f64> = (0..b).map(|_| rng.random_range(0.0..255.0)).collect();

        let ident = random_set(&mut rng, k, b, &DMatrix::identity(b, b));
        let a = classify_mahalanobis(&x, &ident, &cfg).map_err(|e| e.to_string())?;
        let m = classify_mindist(&x, &ident, &cfg).map_err(|e| e.to_string())?;
        violations[0] += usize::from(a != m);

        let cov = random_spd(&mut rng, b);
        let shared = random_set(&mut rng, k, b, &cov);
        let ml = classify_maxlike(&x, &shared, &cfg).map_err(|e| e.to_string())?;
        let mh = classify_mahalanobis(&x, &shared, &cfg).map_err(|e| e.to_string())?;
        violations[1] += usize::from(ml != mh);

        let base = classify_sam(&x, &shared, &cfg).map_err(|e| e.to_string())?;
        let s = rng.random_range(0.01..100.0);
        let scaled: Vec<f64> = x.iter().map(|v| v * s).collect();
        let again = classify_sam(&scaled, &shared, &cfg).map_err(|e| e.to_string())?;
        violations[2] += usize::from(base != again);

        let got = classify_parallelepiped(&x, &shared, &cfg).map_err(|e| e.to_string())?;
        let brute = shared
            .signatures
            .iter()
            .find(|s| (0..b).all(|j| s.band_min[j] <= x[j] && x[j] <= s.band_max[j]))
            .map_or(0, |s| s.class_id);
        violations[3] += usize::from(got != brute);
    }
    ensure(
        violations == [0; 4],
        format!("violations (a,b,c,d) = {violations:?}"),
    )?;
    Ok("1000 pixels, violations (a,b,c,d) = [0, 0, 0, 0]".into())
}

/// 64×64×4 scene, three horizontal bands of rows, class means 60 DN apart
/// per band with σ = 3 DN (20σ).
fn recovery_spec(seed: u64, stddev: f64) -> SceneSpec {
    let class = |id: u32, name: &str, rect: Rect, base: f64| SceneClass {
        info: ClassInfo::new(id, name, [(id * 80) as u8, 100, 200]),
        region: rect,
        mean: (0..4).map(|j| base + 5.0 * j as f64).collect(),
        stddev: vec![stddev; 4],
    };
    SceneSpec {
        rows: 64,
        cols: 64,
        bands: 4,
        seed,
        classes: vec![
            class(1, "water", Rect::new(0, 0, 20, 63), 40.0),
            class(2, "forest", Rect::new(21, 0, 42, 63), 100.0),
            class(3, "urban", Rect::new(43, 0, 63, 63), 160.0),
        ],
    }
}

fn scored(image: &BandStack, sigs: &SignatureSet, test: &TrainingRegions, m: Method) -> Result<f64, String> {
    let c = Classifier::new(m, sigs, &ClassifierConfig::default()).map_err(|e| e.to_string())?;
    let map = classify_image(image, &c).map_err(|e| e.to_string())?;
    let cm = build_confusion(&map, test).map_err(|e| e.to_string())?;
    overall_accuracy(&cm).map_err(|e| e.to_string())
}

fn synthetic_recovery() -> Outcome {
    let spec = recovery_spec(7, 3.0);
    let scene = generate_scene(&spec).map_err(|e| e.to_string())?;
    let (train, test) = scene.truth.split(0.5, 11).map_err(|e| e.to_string())?;
    train.check_disjoint(&test).map_err(|e| e.to_string())?;
    let sigs = extract_signatures(&scene.image, &train).map_err(|e| e.to_string())?;

    let mut parts = Vec::new();
    for m in [Method::MaximumLikelihood, Method::Mahalanobis, Method::MinimumDistance] {
        let oa = scored(&scene.image, &sigs, &test, m)?;
        ensure(oa >= 0.99, format!("{m} OA {oa}"))?;
        parts.push(format!("{m}={oa:.4}"));
    }

    let c = Classifier::new(Method::Parallelepiped, &sigs, &ClassifierConfig::default())
        .map_err(|e| e.to_string())?;
    let map = classify_image(&scene.image, &c).map_err(|e| e.to_string())?;
    let mut outside = 0;
    for (id, r, col) in test.iter() {
        let x = scene.image.pixel(r, col);
        let s = &sigs.signatures[id as usize - 1];
        let inside = x
            .iter()
            .enumerate()
            .all(|(j, v)| s.band_min[j] <= *v && *v <= s.band_max[j]);
        let label = map.label(r, col);
        if inside {
            ensure(label == id, format!("box: pixel ({r},{col}) inside class {id} box got {label}"))?;
        } else if label != id {
            outside += 1;
        }
    }
    parts.push(format!("box errors {outside}, all outside their class box"));
    Ok(parts.join(", "))
}

fn one_band_task() -> (BandStack, TrainingRegions) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pixels: Vec<Vec<f64>> = (0..100)
        .map(|i| {
            let centre = if i < 50 { 20.0 } else { 200.0 };
            vec![(centre + rng.random_range(-4.0_f64..4.0)).round()]
        })
        .collect();
    let image = BandStack::from_pixels(10, 10, &pixels).unwrap();
    let classes = vec![ClassInfo::new(1, "dark", [0, 0, 0]), ClassInfo::new(2, "bright", [255; 3])];
    let members = vec![
        (0..50).map(|i| (i / 10, i % 10)).collect(),
        (50..100).map(|i| (i / 10, i % 10)).collect(),
    ];
    (image, TrainingRegions::new(10, 10, classes, members).unwrap())
}

fn mlp_determinism_and_learning() -> Outcome {
    let (image, regions) = one_band_task();
    let hyper = MlpHyper::defaults_for(1);
    ensure(hyper.seed == 42 && hyper.epochs == 500, "default hyperparameters")?;
    let a = train_mlp(&image, &regions, &hyper).map_err(|e| e.to_string())?;
    let b = train_mlp(&image, &regions, &hyper).map_err(|e| e.to_string())?;
    ensure(a == b, "identical seeds gave different models")?;
    let bits = |m: &specmap::classifiers::MlpModel| -> Vec<u64> {
        m.layers()
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).map(|w| w.to_bits()))
            .collect()
    };
    ensure(bits(&a) == bits(&b), "weights differ bitwise")?;

    let cfg = ClassifierConfig::default();
    let mut correct = 0;
    for (id, r, c) in regions.iter() {
        correct += usize::from(classify_mlp(&image.pixel(r, c), &a, &cfg).map_err(|e| e.to_string())? == id);
    }
    let acc = correct as f64 / regions.total_pixels() as f64;
    ensure(acc >= 0.95, format!("training accuracy {acc}"))?;
    Ok(format!("bit-identical models, training accuracy {acc:.3}"))
}

fn round_trips(dir: &Path) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);

    for trial in 0..20 {
        let k = rng.random_range(1..=255u32);
        let (rows, cols) = (rng.random_range(1..30), rng.random_range(1..30));
        let legend: Vec<ClassInfo> = (1..=k)
            .map(|id| ClassInfo::new(id, format!("class_{id}"), [rng.random(), rng.random(), rng.random()]))
            .collect();
        let labels = (0..rows * cols).map(|_| rng.random_range(0..=k)).collect();
        let map = ClassificationMap::new(rows, cols, labels, legend).map_err(|e| e.to_string())?;
        let files = write_map(&map, dir.join(format!("map{trial}"))).map_err(|e| e.to_string())?;
        let back = read_map(&files.labels, &files.legend).map_err(|e| e.to_string())?;
        ensure(
            back.labels() == map.labels() && back.legend() == map.legend() && back.rows() == rows,
            format!("label layer trial {trial}"),
        )?;
    }

    for trial in 0..20 {
        let b = rng.random_range(1..=6);
        let k = rng.random_range(1..=5);
        let cov = random_spd(&mut rng, b) * rng.random_range(1e-3..1e3);
        let mut set = random_set(&mut rng, k, b, &cov);
        for s in &mut set.signatures {
            s.mean.iter_mut().for_each(|m| *m *= rng.random_range(0.1..10.0));
        }
        let text = set.to_text();
        let back = SignatureSet::parse(&text, "rt").map_err(|e| e.to_string())?;
        ensure(back.to_text() == text, format!("signature text not stable, trial {trial}"))?;
        let close = |x: f64, y: f64| (x - y).abs() <= 5e-10 * x.abs().max(f64::MIN_POSITIVE);
        for (s, t) in set.signatures.iter().zip(&back.signatures) {
            let pairs = s
                .mean
                .iter()
                .zip(&t.mean)
                .chain(s.band_min.iter().zip(&t.band_min))
                .chain(s.band_max.iter().zip(&t.band_max))
                .chain(s.covariance.iter().zip(t.covariance.iter()));
            for (x, y) in pairs {
                ensure(close(*x, *y), format!("signature value {x} read back as {y}"))?;
            }
        }
    }

    let spec = recovery_spec(31337, 12.0);
    let one = generate_scene(&spec).map_err(|e| e.to_string())?;
    let two = generate_scene(&spec).map_err(|e| e.to_string())?;
    let reparsed = SceneSpec::parse(&spec.to_text(), "spec").map_err(|e| e.to_string())?;
    let three = generate_scene(&reparsed).map_err(|e| e.to_string())?;
    let bits = |s: &BandStack| s.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    ensure(bits(&one.image) == bits(&two.image), "scene regeneration differs")?;
    ensure(bits(&one.image) == bits(&three.image), "scene from reparsed spec differs")?;
    Ok("label layers, signature files (10 significant digits), scene regeneration".into())
}

fn parallel_determinism(dir: &Path) -> Outcome {
    let spec = recovery_spec(3, 25.0);
    let scene = generate_scene(&spec).map_err(|e| e.to_string())?;
    let (train, _) = scene.truth.split(0.5, 1).map_err(|e| e.to_string())?;
    let sigs = extract_signatures(&scene.image, &train).map_err(|e| e.to_string())?;
    let mut hyper = MlpHyper::defaults_for(4);
    hyper.epochs = 20;
    let model = train_mlp(&scene.image, &train, &hyper).map_err(|e| e.to_string())?;

    for m in Method::ALL {
        let mut layers = Vec::new();
        for workers in [0, 4] {
            let cfg = ClassifierConfig {
                workers,
                ..ClassifierConfig::default()
            };
            let c = match m {
                Method::NeuralNetwork => Classifier::from_model(&model, sigs.legend(), &cfg),
                _ => Classifier::new(m, &sigs, &cfg),
            }
            .map_err(|e| e.to_string())?;
            let map = classify_image(&scene.image, &c).map_err(|e| e.to_string())?;
            layers.push(map.encode_labels().map_err(|e| e.to_string())?);
        }
        ensure(layers[0] == layers[1], format!("{m}: label layers differ"))?;
    }

    // Same check through the binary and the environment variable.
    let layout = spec.layout();
    write_bsq(dir.join("p.bsq"), &scene.image, &layout).map_err(|e| e.to_string())?;
    write_layout(dir.join("p.hdr"), &layout, &[]).map_err(|e| e.to_string())?;
    read_layout(dir.join("p.hdr")).map_err(|e| e.to_string())?;
    write_signatures(dir.join("p.sig"), &sigs).map_err(|e| e.to_string())?;
    write_model(dir.join("p.mlp"), &model).map_err(|e| e.to_string())?;
    for method in ["maxlike", "mlp"] {
        let mut outputs = Vec::new();
        for threads in ["0", "4"] {
            let prefix = dir.join(format!("p_{method}_{threads}"));
            let status = Command::new(env!("CARGO_BIN_EXE_specmap"))
                .env("SPECMAP_THREADS", threads)
                .arg("classify")
                .args(["--method", method])
                .arg("--image")
                .arg(dir.join("p.bsq"))
                .arg("--layout")
                .arg(dir.join("p.hdr"))
                .arg("--sig")
                .arg(dir.join("p.sig"))
                .arg("--model")
                .arg(dir.join("p.mlp"))
                .arg("--out")
                .arg(&prefix)
                .output()
                .map_err(|e| e.to_string())?;
            ensure(status.status.success(), format!("classify {method} exit {:?}", status.status))?;
            let lbl = prefix.with_extension("lbl");
            outputs.push(std::fs::read(&lbl).map_err(|e| e.to_string())?);
        }
        ensure(outputs[0] == outputs[1], format!("binary {method}: .lbl differs"))?;
    }
    Ok("all six methods byte-identical at 0 and 4 workers (library and binary)".into())
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let criteria: Vec<Criterion> = vec![
        ("1 error matrix accuracy and kappa", Box::new(error_matrix_golden)),
        ("2 percent matrix", Box::new(percent_matrix_golden)),
        ("3 framed raster layout", Box::new(|| framed_layout(dir.path()))),
        ("4 cross-classifier equivalence", Box::new(cross_classifier_equivalence)),
        ("5 synthetic scene recovery", Box::new(synthetic_recovery)),
        ("6 network determinism and learning", Box::new(mlp_determinism_and_learning)),
        ("7 I/O round trips", Box::new(|| round_trips(dir.path()))),
        ("8 determinism under parallelism", Box::new(|| parallel_determinism(dir.path()))),
    ];

    let mut failed = 0;
    for (name, check) in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {p:?}")));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  criterion {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name} ({secs:.2}s): {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
