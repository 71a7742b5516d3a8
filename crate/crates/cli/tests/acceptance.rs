//! Acceptance gate: ten criteria, one pass/fail line each.
//!
//! Every threshold below is pinned here and nowhere else. Derived quantities
//! are checked against oracles computed independently in this file.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gazegate_core::audio::{rms, AudioBuffer, CANONICAL_RATE};
use gazegate_core::dsp::pipeline::{dereverberate_channels, enhance};
use gazegate_core::dsp::{aec_nlms, erle_db, estimate_doa, process_pipeline, AecState, DspConfig};
use gazegate_core::face::{
    enroll, recognize, synthetic_face, EnrollmentDb, FaceEmbedder, FaceEmbedding,
    ProjectionEmbedder, DEFAULT_MATCH_THRESHOLD, EMBEDDING_DIM,
};
use gazegate_core::scene::{simulate_scene, ArrayGeometry, SceneSpec, SourceSpec};
use gazegate_core::session::{
    builtin_scenarios, enumerate_safety, run_attack_suite, Action, Event, ScenarioEnv,
    SessionConfig, SessionState,
};
use gazegate_core::signal::{angle_diff_deg, convolve, projection_snr_db};
use gazegate_core::stft::stft;
use gazegate_core::synth;
use gazegate_core::wakeword::{
    detect_stream, dtw_distance, enroll_template, evaluate_roc, positive_corpus, threshold_grid,
    DetectConfig, DtwSpotter, MfccConfig, NegativeCorpus,
};
use rand::Rng;

const FS: u32 = CANONICAL_RATE;

// Criterion 1
const DOA_SCENES: usize = 36;
const DOA_MIN_CORRECT: usize = 34;
const DOA_TOLERANCE_DEG: f64 = 5.0;
const DOA_SNR_DB: f64 = 20.0;
const DOA_TIME_LIMIT: Duration = Duration::from_secs(10);
// Criterion 2
const BEAM_MIN_GAIN_DB: f64 = 3.0;
// Criterion 3
const AEC_SECONDS: usize = 10;
const AEC_PATH_TAPS: usize = 64;
const AEC_FILTER_TAPS: usize = 256;
const AEC_STEP: f64 = 0.5;
const AEC_MIN_ERLE_DB: f64 = 20.0;
const AEC_ERLE_TAIL_S: f64 = 2.5;
const AEC_MAX_TAP_ERROR: f64 = 0.20;
/// Samples used for the least-squares reference fit.
const AEC_LS_SAMPLES: usize = 24_000;
// Criterion 4
const NS_INPUT_SNR_DB: f64 = 10.0;
const NS_MIN_SEG_SNR_GAIN_DB: f64 = 5.0;
const SEG_LEN: usize = 256;
const SEG_SNR_RANGE_DB: (f64, f64) = (-10.0, 35.0);
// Criterion 5
const DRR_T60_S: f64 = 0.6;
const DRR_MIN_GAIN_DB: f64 = 3.0;
// Criterion 6
const ROC_POSITIVES: usize = 20;
const ROC_NEGATIVE_S: f64 = 3600.0;
const ROC_CHUNK_S: f64 = 60.0;
const LENIENT_THRESHOLD: f64 = 0.5;
const MID_THRESHOLD: f64 = 0.1;
const DTW_MAX_SIDE: usize = 5;
const DTW_INSTANCES_PER_SHAPE: usize = 20;
const DTW_TOLERANCE: f64 = 1e-12;
// Criterion 7
const FACE_ORACLE_INSTANCES: usize = 1000;
const FACE_UNKNOWN_TRIALS: u64 = 100;
const FACE_MIN_DENIED: usize = 99;
// Criterion 8
const SAFETY_MAX_LEN: usize = 8;
const SAFETY_TIME_LIMIT: Duration = Duration::from_secs(60);
const ATTACKS: usize = 7;
const GATE_OFF_MIN_ALLOWED: usize = 6;
// Criterion 9
const PRE_ROLL_S: f64 = 0.5;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn mono(x: Vec<f64>) -> AudioBuffer {
    AudioBuffer::mono(x, FS).unwrap()
}

fn source(az: f64, signal: Vec<f64>) -> SourceSpec {
    SourceSpec {
        azimuth_deg: az,
        distance_m: 1.0,
        signal: mono(signal),
        level_db: 0.0,
    }
}

fn dbfs(x: f64) -> f64 {
    20.0 * x.log10()
}

fn doa_accuracy() -> Outcome {
    let start = Instant::now();
    let geometry = ArrayGeometry::default();
    let mut correct = 0;
    let mut worst: f64 = 0.0;
    for k in 0..DOA_SCENES {
        let truth = 10.0 * k as f64;
        let sig = synth::speech_like(8192, 0.1, 100 + k as u64, FS);
        let spec = SceneSpec {
            sources: vec![source(truth, sig.clone())],
            noise_level_db: Some(dbfs(rms(&sig)) - DOA_SNR_DB),
            seed: k as u64,
            ..Default::default()
        };
        let chans = simulate_scene(&spec, &geometry)
            .map_err(|e| e.to_string())?
            .mics
            .into_channels();
        let refs: Vec<&[f64]> = chans.iter().map(|c| c.as_slice()).collect();
        let est = estimate_doa(&refs, &geometry, 5.0, FS).map_err(|e| e.to_string())?;
        let err = est.azimuth().map_or(180.0, |az| angle_diff_deg(az, truth));
        worst = worst.max(err);
        correct += usize::from(err <= DOA_TOLERANCE_DEG);
    }
    let elapsed = start.elapsed();
    check(
        correct >= DOA_MIN_CORRECT && elapsed < DOA_TIME_LIMIT,
        format!("{correct}/{DOA_SCENES} within {DOA_TOLERANCE_DEG} deg (worst {worst:.1}), {elapsed:.2?}"),
        format!("{correct}/{DOA_SCENES} within tolerance, {elapsed:.2?}"),
    )
}

fn beamforming_gain() -> Outcome {
    let sig = synth::speech_like(FS as usize * 4, 0.1, 7, FS);
    let spec = SceneSpec {
        sources: vec![source(30.0, sig.clone())],
        noise_level_db: Some(dbfs(rms(&sig))),
        seed: 3,
        ..Default::default()
    };
    let scene = simulate_scene(&spec, &ArrayGeometry::default()).map_err(|e| e.to_string())?;
    let bundle = process_pipeline(
        &scene.mics,
        &ArrayGeometry::default(),
        None,
        &DspConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    // Each raw mic is scored against its own direct path, ch0 against the
    // source as it would arrive at the array centre.
    let best_raw = (0..4)
        .map(|m| projection_snr_db(scene.mics.channel(m), &scene.truth.direct_target[m]))
        .fold(f64::NEG_INFINITY, f64::max);
    let ch0 = projection_snr_db(&bundle.processed, &scene.truth.clean_target);
    let gain = ch0 - best_raw;
    check(
        gain >= BEAM_MIN_GAIN_DB,
        format!("ch0 {ch0:.2} dB vs best raw {best_raw:.2} dB: +{gain:.2} dB"),
        format!("gain {gain:.2} dB < {BEAM_MIN_GAIN_DB}"),
    )
}

/// Least-squares FIR fit of `d` from `x` over samples `[start, start + n)`
/// via explicit normal equations.
fn least_squares_path(x: &[f64], d: &[f64], taps: usize, start: usize, n: usize) -> Vec<f64> {
    let mut r = nalgebra::DMatrix::<f64>::zeros(taps, taps);
    let mut p = nalgebra::DVector::<f64>::zeros(taps);
    let mut row = vec![0.0; taps];
    for t in start..start + n {
        for (i, v) in row.iter_mut().enumerate() {
            *v = if t >= i { x[t - i] } else { 0.0 };
        }
        for i in 0..taps {
            p[i] += row[i] * d[t];
            for j in 0..=i {
                r[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..taps {
        for j in 0..i {
            r[(j, i)] = r[(i, j)];
        }
    }
    r.cholesky()
        .expect("white-noise autocorrelation is positive definite")
        .solve(&p)
        .iter()
        .copied()
        .collect()
}

fn aec() -> Outcome {
    let n = FS as usize * AEC_SECONDS;
    let x = synth::white_noise(n, 0.1, 21, 0);
    let mut rng = synth::rng(22, 0);
    let path: Vec<f64> = (0..AEC_PATH_TAPS)
        .map(|i| rng.random_range(-1.0..1.0) * (-(i as f64) / 12.0).exp())
        .collect();
    let mut d = convolve(&x, &path);
    d.truncate(n);
    let state = AecState::new(AEC_FILTER_TAPS, AEC_STEP, 1e-6).map_err(|e| e.to_string())?;
    let (e, state) = aec_nlms(&d, &x, state).map_err(|e| e.to_string())?;
    let tail = n - (AEC_ERLE_TAIL_S * FS as f64) as usize;
    let erle = erle_db(&d[tail..], &e[tail..]);
    let ls = least_squares_path(&x, &d, AEC_FILTER_TAPS, n - AEC_LS_SAMPLES, AEC_LS_SAMPLES);
    let diff: f64 = state
        .taps
        .iter()
        .zip(&ls)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = ls.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rel = diff / norm;
    check(
        erle >= AEC_MIN_ERLE_DB && rel <= AEC_MAX_TAP_ERROR,
        format!("ERLE {erle:.1} dB over final {AEC_ERLE_TAIL_S} s, taps {:.2e} relative L2 from least squares", rel),
        format!("ERLE {erle:.1} dB, tap error {rel:.3}"),
    )
}

/// Mean per-segment SNR of `y` against `clean`, clamped, over segments where
/// the clean signal is active.
fn segmental_snr_db(y: &[f64], clean: &[f64]) -> f64 {
    let mut acc = Vec::new();
    for (ys, cs) in y.chunks_exact(SEG_LEN).zip(clean.chunks_exact(SEG_LEN)) {
        let s: f64 = cs.iter().map(|v| v * v).sum();
        if s == 0.0 {
            continue;
        }
        let e: f64 = ys.iter().zip(cs).map(|(a, b)| (a - b).powi(2)).sum();
        acc.push((10.0 * (s / e).log10()).clamp(SEG_SNR_RANGE_DB.0, SEG_SNR_RANGE_DB.1));
    }
    acc.iter().sum::<f64>() / acc.len() as f64
}

fn noise_suppression() -> Outcome {
    // A 1 kHz tone keyed on for 0.4 s of every second: the minimum-statistics
    // window (1.5 s) always sees noise-only stretches, as it would between
    // words. A tone held longer than the window is stationary and would be
    // tracked as noise.
    let n = FS as usize * 6;
    let tone = synth::sine(n, 1000.0, 0.1, FS);
    let clean: Vec<f64> = tone
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if (i % FS as usize) < 6400 && i >= FS as usize {
                *v
            } else {
                0.0
            }
        })
        .collect();
    let active: Vec<f64> = clean.iter().filter(|v| **v != 0.0).copied().collect();
    let noise_rms = rms(&active) / 10f64.powf(NS_INPUT_SNR_DB / 20.0);
    let x: Vec<f64> = clean
        .iter()
        .zip(synth::white_noise(n, noise_rms, 31, 0))
        .map(|(c, w)| c + w)
        .collect();
    let cfg = DspConfig::default();
    let y = enhance(&x, FS, &cfg).map_err(|e| e.to_string())?;
    let gain = segmental_snr_db(&y, &clean) - segmental_snr_db(&x, &clean);
    let sx = stft(&x, cfg.window_size, cfg.hop, FS).map_err(|e| e.to_string())?;
    // The magnitude bound is checked on the suppressor output, bin by bin.
    let noise = gazegate_core::dsp::estimate_noise(
        &sx,
        cfg.noise_initial_frames,
        cfg.noise_window_frames(FS),
    )
    .map_err(|e| e.to_string())?;
    let direct =
        gazegate_core::dsp::suppress_noise(&sx, &noise, cfg.oversubtraction, cfg.spectral_floor)
            .map_err(|e| e.to_string())?;
    let amplified = sx
        .frames
        .iter()
        .zip(&direct.frames)
        .flat_map(|(a, b)| a.iter().zip(b))
        .filter(|(a, b)| b.norm() > a.norm() * (1.0 + 1e-12))
        .count();
    check(
        gain >= NS_MIN_SEG_SNR_GAIN_DB && amplified == 0,
        format!(
            "segmental SNR +{gain:.2} dB, 0 of {} bins amplified",
            sx.num_frames() * sx.num_bins()
        ),
        format!("segmental SNR gain {gain:.2} dB, {amplified} bins amplified"),
    )
}

fn dereverberation() -> Outcome {
    let sig = synth::speech_like(FS as usize * 4, 0.1, 0, FS);
    let spec = SceneSpec {
        sources: vec![source(30.0, sig)],
        t60: DRR_T60_S,
        seed: 0,
        ..Default::default()
    };
    let scene = simulate_scene(&spec, &ArrayGeometry::default()).map_err(|e| e.to_string())?;
    let cleaned = dereverberate_channels(scene.mics.channels(), FS, &DspConfig::default())
        .map_err(|e| e.to_string())?;
    // DRR as the energy ratio of the direct-path component to everything else.
    let direct = &scene.truth.direct_target[0];
    let before = projection_snr_db(scene.mics.channel(0), direct);
    let after = projection_snr_db(&cleaned[0], direct);
    let gain = after - before;
    check(
        gain >= DRR_MIN_GAIN_DB,
        format!("DRR {before:.2} -> {after:.2} dB (+{gain:.2} dB)"),
        format!("DRR gain {gain:.2} dB < {DRR_MIN_GAIN_DB}"),
    )
}

/// Exhaustive DTW: every monotone path from (0,0) to (n-1,m-1); the best path
/// minimises total cost, then length; the distance is cost / length.
fn dtw_brute_force(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    fn walk(
        a: &[Vec<f64>],
        b: &[Vec<f64>],
        i: usize,
        j: usize,
        cost: f64,
        len: usize,
        best: &mut (f64, usize),
    ) {
        let c = cost
            + a[i]
                .iter()
                .zip(&b[j])
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
        let len = len + 1;
        if i + 1 == a.len() && j + 1 == b.len() {
            if c < best.0 || (c == best.0 && len < best.1) {
                *best = (c, len);
            }
            return;
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, c, len, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, c, len, best);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, c, len, best);
        }
    }
    let mut best = (f64::INFINITY, 0);
    walk(a, b, 0, 0, 0.0, 0, &mut best);
    best.0 / best.1 as f64
}

fn wake_word() -> Outcome {
    // DTW against path enumeration.
    let mut rng = synth::rng(61, 0);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for rows in 1..=DTW_MAX_SIDE {
        for cols in 1..=DTW_MAX_SIDE {
            for _ in 0..DTW_INSTANCES_PER_SHAPE {
                let dim = rng.random_range(1..=3);
                let mut mat = |n: usize| -> Vec<Vec<f64>> {
                    (0..n)
                        .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
                        .collect()
                };
                let (a, b) = (mat(rows), mat(cols));
                let got = dtw_distance(&a, &b).map_err(|e| e.to_string())?;
                worst = worst.max((got - dtw_brute_force(&a, &b)).abs());
                cases += 1;
            }
        }
    }
    if worst > DTW_TOLERANCE {
        return Err(format!("DTW differs from enumeration by {worst:e}"));
    }

    let takes: Vec<AudioBuffer> = (0..3)
        .map(|k| {
            mono(synth::WordPattern::wake_word().render(&synth::Variation::random(100 + k), FS))
        })
        .collect();
    let template =
        enroll_template("alexa", &takes, &MfccConfig::default()).map_err(|e| e.to_string())?;
    let spotter =
        DtwSpotter::new(template.clone(), DetectConfig::default()).map_err(|e| e.to_string())?;
    let thresholds = threshold_grid(0.05, 0.5, 10);

    // Self-detection: the enrollment takes themselves.
    let own = evaluate_roc(
        &spotter,
        &takes,
        [Ok(mono(vec![0.0; FS as usize * 10]))],
        &[LENIENT_THRESHOLD],
    )
    .map_err(|e| e.to_string())?;
    let self_miss = own.points[0].miss_rate;

    // Silence: ten minutes of digital zeros at every threshold.
    let silence = (0..10).map(|_| Ok(mono(vec![0.0; FS as usize * 60])));
    let quiet = evaluate_roc(&spotter, &takes, silence, &thresholds).map_err(|e| e.to_string())?;
    let silence_fa: f64 = quiet.points.iter().map(|p| p.false_alarms_per_hour).sum();

    // One hour of negatives against twenty positives.
    let positives = positive_corpus(1, ROC_POSITIVES, FS);
    let report = evaluate_roc(
        &spotter,
        &positives,
        NegativeCorpus::new(2, ROC_NEGATIVE_S, ROC_CHUNK_S, FS),
        &thresholds,
    )
    .map_err(|e| e.to_string())?;
    let monotone = report.points.windows(2).all(|w| {
        w[1].miss_rate >= w[0].miss_rate && w[1].false_alarms_per_hour <= w[0].false_alarms_per_hour
    });

    // Hand count at the mid threshold: thresholded detection per chunk,
    // fanned out over threads.
    let chunks: Vec<AudioBuffer> = NegativeCorpus::new(2, ROC_NEGATIVE_S, ROC_CHUNK_S, FS)
        .map(Result::unwrap)
        .collect();
    let counted: usize = std::thread::scope(|s| {
        let handles: Vec<_> = chunks
            .chunks(chunks.len().div_ceil(8))
            .map(|group| {
                let template = &template;
                s.spawn(move || {
                    group
                        .iter()
                        .map(|c| {
                            detect_stream(c, template, MID_THRESHOLD, &DetectConfig::default())
                                .unwrap()
                                .len()
                        })
                        .sum::<usize>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).sum()
    });
    let mid = report
        .points
        .iter()
        .find(|p| (p.threshold - MID_THRESHOLD).abs() < 1e-12)
        .ok_or("mid threshold missing from grid")?;
    let hours = report.negative_duration_s / 3600.0;
    let fa_matches = (mid.false_alarms_per_hour - counted as f64 / hours).abs() < 1e-9;

    check(
        monotone && self_miss == 0.0 && silence_fa == 0.0 && fa_matches,
        format!(
            "ROC monotone over {} thresholds ({} positives, {:.1} h negatives); self miss 0; silence FA/h 0; {} FA at {MID_THRESHOLD} = {:.0}/h; DTW exact on {cases} matrices up to {DTW_MAX_SIDE}x{DTW_MAX_SIDE}",
            thresholds.len(),
            positives.len(),
            hours,
            counted,
            mid.false_alarms_per_hour
        ),
        format!("monotone {monotone}, self miss {self_miss}, silence FA {silence_fa}, recount {counted} vs {}", mid.false_alarms_per_hour * hours),
    )
}

fn random_unit(rng: &mut impl Rng) -> FaceEmbedding {
    FaceEmbedding::normalize(
        (0..EMBEDDING_DIM)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
    )
    .unwrap()
}

/// Nearest neighbour by scanning every (identity, record) pair with the
/// query quantised like the stored records; ties go to the smaller name.
fn face_oracle(db: &EnrollmentDb, q: &FaceEmbedding) -> Option<(String, f64)> {
    let qf: Vec<f32> = q.as_slice().iter().map(|&v| v as f32).collect();
    let mut all: Vec<(f64, String)> = Vec::new();
    for (name, recs) in db.entries() {
        for r in recs {
            let mut s = 0.0f64;
            for (a, b) in r.values().iter().zip(&qf) {
                s += (*a as f64 - *b as f64).powi(2);
            }
            all.push((s.sqrt(), name.clone()));
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.into_iter().next().map(|(d, n)| (n, d))
}

fn face_gate() -> Outcome {
    let mut rng = synth::rng(71, 0);
    let mut mismatches = 0;
    let mut ties = 0;
    for _ in 0..FACE_ORACLE_INSTANCES {
        let mut db = EnrollmentDb::new(0, 0);
        let ids = rng.random_range(0..=5);
        let mut pool: Vec<FaceEmbedding> = Vec::new();
        for k in 0..ids {
            let n = rng.random_range(1..=4);
            let embs: Vec<FaceEmbedding> = (0..n)
                .map(|_| {
                    if !pool.is_empty() && rng.random_bool(0.2) {
                        pool[rng.random_range(0..pool.len())].clone()
                    } else {
                        random_unit(&mut rng)
                    }
                })
                .collect();
            pool.extend(embs.iter().cloned());
            db = db
                .with_embeddings(&format!("id{}", (b'a' + (5 - k) as u8) as char), &embs)
                .unwrap();
        }
        // Queries are sometimes an enrolled vector, forcing exact ties.
        let q = if !pool.is_empty() && rng.random_bool(0.3) {
            pool[rng.random_range(0..pool.len())].clone()
        } else {
            random_unit(&mut rng)
        };
        let threshold = rng.random_range(0.05..1.6);
        let got = recognize(&db, &q, threshold).map_err(|e| e.to_string())?;
        let want = face_oracle(&db, &q);
        let same = match &want {
            None => got.identity.is_none() && !got.matched,
            Some((name, d)) => {
                got.identity.as_deref() == Some(name)
                    && got.distance == Some(*d)
                    && got.matched == (*d <= threshold)
            }
        };
        ties += usize::from(want.as_ref().is_some_and(|(_, d)| *d == 0.0));
        mismatches += usize::from(!same);
    }

    let embedder = ProjectionEmbedder::new(7);
    let owner: Vec<_> = (0..3).map(|t| synthetic_face(1, t)).collect();
    let db =
        enroll(&EnrollmentDb::new(0, 7), "owner", &owner, &embedder).map_err(|e| e.to_string())?;
    let self_d = recognize(
        &db,
        &embedder.embed(&owner[1]).map_err(|e| e.to_string())?,
        DEFAULT_MATCH_THRESHOLD,
    )
    .map_err(|e| e.to_string())?
    .distance;
    let denied = (0..FACE_UNKNOWN_TRIALS)
        .filter(|i| {
            let e = embedder.embed(&synthetic_face(1000 + i, 0)).unwrap();
            !recognize(&db, &e, DEFAULT_MATCH_THRESHOLD).unwrap().matched
        })
        .count();
    check(
        mismatches == 0 && self_d == Some(0.0) && denied >= FACE_MIN_DENIED,
        format!("oracle agrees on {FACE_ORACLE_INSTANCES}/{FACE_ORACLE_INSTANCES} ({ties} exact-duplicate queries); enrolled image distance 0; {denied}/{FACE_UNKNOWN_TRIALS} strangers denied"),
        format!("{mismatches} oracle mismatches, self distance {self_d:?}, {denied} denied"),
    )
}

fn security() -> Outcome {
    let start = Instant::now();
    let on = SessionConfig::default();
    let off = SessionConfig {
        gate_enabled: false,
        ..Default::default()
    };
    let safe_on = enumerate_safety(&on, SAFETY_MAX_LEN).map_err(|e| e.to_string())?;
    let safe_off = enumerate_safety(&off, SAFETY_MAX_LEN).map_err(|e| e.to_string())?;
    let env_on = ScenarioEnv::synthetic(7, on).map_err(|e| e.to_string())?;
    let env_off = ScenarioEnv::synthetic(7, off).map_err(|e| e.to_string())?;
    let report =
        run_attack_suite(&builtin_scenarios(), &env_on, &env_off).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(
        safe_on.passed()
            && safe_off.passed()
            && report.gate_on.attacks == ATTACKS
            && report.gate_on.blocked == ATTACKS
            && report.gate_off.allowed >= GATE_OFF_MIN_ALLOWED
            && report.controls_allowed
            && elapsed < SAFETY_TIME_LIMIT,
        format!(
            "{} sequences (len <= {SAFETY_MAX_LEN}) without violation; attacks blocked {}/{} gate on, allowed {}/{} gate off; {elapsed:.2?}",
            safe_on.sequences, report.gate_on.blocked, report.gate_on.attacks, report.gate_off.allowed, report.gate_off.attacks
        ),
        format!(
            "violations {}/{}, gate on blocked {}, gate off allowed {}, controls {}, {elapsed:.2?}",
            safe_on.violation_count, safe_off.violation_count, report.gate_on.blocked, report.gate_off.allowed, report.controls_allowed
        ),
    )
}

fn pre_roll() -> Outcome {
    let cfg = SessionConfig {
        pre_roll_s: PRE_ROLL_S,
        ..Default::default()
    };
    let stream = synth::white_noise(FS as usize * 4, 0.1, 91, 0);
    let chunk = 1600;
    let wake_t = 2.0;
    let wake_sample = (wake_t * FS as f64) as usize;
    let mut state = SessionState::new(&cfg);
    let mut ring_at_wake = Vec::new();
    let mut actions = state
        .handle(
            &Event::FaceObserved {
                t: 0.0,
                auth: gazegate_core::face::AuthEvent::Granted {
                    identity: "owner".into(),
                    distance: 0.0,
                },
            },
            &cfg,
        )
        .map_err(|e| e.to_string())?;
    for (k, c) in stream.chunks(chunk).enumerate() {
        let end = k * chunk + c.len();
        actions.extend(
            state
                .handle(
                    &Event::AudioChunk {
                        t: end as f64 / FS as f64,
                        samples: c.to_vec(),
                    },
                    &cfg,
                )
                .map_err(|e| e.to_string())?,
        );
        if end == wake_sample {
            ring_at_wake = state.ring.contents();
            actions.extend(
                state
                    .handle(
                        &Event::WakeDetected {
                            t: wake_t,
                            score: 0.9,
                        },
                        &cfg,
                    )
                    .map_err(|e| e.to_string())?,
            );
        }
    }
    actions.extend(
        state
            .handle(&Event::EndOfSpeech { t: 4.0 }, &cfg)
            .map_err(|e| e.to_string())?,
    );
    let u = actions
        .iter()
        .find_map(|a| {
            if let Action::UtteranceEmitted(u) = a {
                Some(u)
            } else {
                None
            }
        })
        .ok_or("no utterance emitted")?;
    let n = cfg.pre_roll_samples();
    let x = u.audio.channel(0);
    let exact_ring = x[..n] == ring_at_wake[..];
    let exact_stream = x[..n] == stream[wake_sample - n..wake_sample];
    let predates = u.start_sample as usize + n == wake_sample;
    let live_ok = x[n..] == stream[wake_sample..];
    check(
        exact_ring && exact_stream && predates && live_ok,
        format!("first {n} samples equal the ring at wake and stream [{}, {wake_sample}); utterance {:.2} s", wake_sample - n, u.audio.duration_s()),
        format!("ring {exact_ring}, stream {exact_stream}, predates {predates}, live {live_ok}"),
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_gazegate"))
        .current_dir(dir)
        .args(["--seed", "5", "--freeze-time", "-q"])
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(())
}

fn collect_files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(root).unwrap().display().to_string(),
                    std::fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

fn cli_determinism() -> Outcome {
    let scene = Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata/scene.toml");
    let scene = scene.to_str().unwrap();
    let run = || -> Result<Vec<(String, Vec<u8>)>, String> {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let d = tmp.path();
        run_cli(
            d,
            &[
                "synth-corpus",
                "--out",
                "corpus",
                "--positives",
                "4",
                "--negative-s",
                "60",
            ],
        )?;
        run_cli(d, &["simulate", "--scene", scene, "--out", "sim"])?;
        run_cli(
            d,
            &[
                "process",
                "--input",
                "sim/mics.wav",
                "--reference",
                "sim/reference.wav",
                "--out",
                "proc",
            ],
        )?;
        run_cli(
            d,
            &[
                "enroll-face",
                "--db",
                "faces.db",
                "--identity",
                "owner",
                "--images",
                "corpus/faces/owner_*.pgm",
            ],
        )?;
        run_cli(
            d,
            &[
                "enroll-wake",
                "--name",
                "alexa",
                "--wavs",
                "corpus/enroll/*.wav",
                "--out",
                "alexa.json",
            ],
        )?;
        run_cli(
            d,
            &[
                "eval-roc",
                "--manifest",
                "corpus/manifest.toml",
                "--template",
                "alexa.json",
                "--out",
                "roc.csv",
                "--log",
                "roc.jsonl",
            ],
        )?;
        run_cli(
            d,
            &[
                "attack-suite",
                "--out",
                "attack.json",
                "--trace-dir",
                "traces",
            ],
        )?;
        run_cli(
            d,
            &[
                "run-pipeline",
                "--input",
                "sim/mics.wav",
                "--reference",
                "sim/reference.wav",
                "--db",
                "faces.db",
                "--template",
                "alexa.json",
                "--face",
                "0.5:corpus/faces/owner_00.pgm",
                "--out",
                "pipe",
            ],
        )?;
        Ok(collect_files(d))
    };
    let a = run()?;
    let b = run()?;
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    check(
        a.len() == b.len() && differing.is_empty() && !a.is_empty(),
        format!(
            "8 commands, {} artefacts byte-identical across two runs",
            a.len()
        ),
        format!("{} vs {} files; differing: {differing:?}", a.len(), b.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 DoA accuracy", doa_accuracy),
        ("2 beamforming gain", beamforming_gain),
        ("3 echo cancellation", aec),
        ("4 noise suppression", noise_suppression),
        ("5 de-reverberation", dereverberation),
        ("6 wake-word methodology", wake_word),
        ("7 face gate", face_gate),
        ("8 security property", security),
        ("9 pre-roll", pre_roll),
        ("10 CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!(
                "criterion {name}: PASS - {detail} [{:.1?}]",
                start.elapsed()
            ),
            Err(detail) => {
                failed += 1;
                println!(
                    "criterion {name}: FAIL - {detail} [{:.1?}]",
                    start.elapsed()
                );
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
