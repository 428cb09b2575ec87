//! Prints per-seed bucket metrics and OOD fractions on the synthetic
//! benchmark.

use progst::classifier::LinearClassifier;
use progst::evaluation::{per_bucket_metrics, probe_ood, evaluate, FIRST_ITERATION, PRETRAINED};
use progst::langid::Detector;
use progst::pipeline::{self, RunConfig};
use progst::synthgen::{generate, SynthConfig};

fn main() -> progst::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut synth = SynthConfig::default();
    let mut run = RunConfig::default();
    let mut first = 0u64;
    for kv in &args {
        let (k, v) = kv.split_once('=').expect("key=value");
        match k {
            "vocab" => synth.vocab_size_per_lang = v.parse().unwrap(),
            "sent" => synth.sentiment_word_fraction = v.parse().unwrap(),
            "agree" => synth.polarity_agreement = v.parse().unwrap(),
            "ns" => synth.n_source = v.parse().unwrap(),
            "nt" => synth.n_target = v.parse().unwrap(),
            "noise" => synth.label_noise = v.parse().unwrap(),
            "mix" => {
                synth.mix_ratio_distribution = v
                    .split(',')
                    .map(|p| {
                        let (r, w) = p.split_once(':').unwrap();
                        (r.parse().unwrap(), w.parse().unwrap())
                    })
                    .collect()
            }
            "lr" => run.classifier.learning_rate = v.parse().unwrap(),
            "l2" => run.classifier.l2 = v.parse().unwrap(),
            "bs" => run.classifier.batch_size = v.parse().unwrap(),
            "epochs" => run.classifier.epochs = v.parse().unwrap(),
            "first" => first = v.parse().unwrap(),
            "up" => run.upsample_pseudo = v.parse().unwrap(),
            _ => panic!("unknown {k}"),
        }
    }
    let mut wins = [0; 4];
    let mut totals = [0.0f64; 2];
    for seed in first..first + 5 {
        let mut b2 = [0.0f64; 2];
        let mut zs = [0.0f64; 2];
        let corpus = generate(&SynthConfig { seed, ..synth.clone() })?;
        let det = Detector::Lexicon(corpus.lexicon_a.clone());
        let cfg = RunConfig { seed, ..run.clone() };
        let golds = corpus.target.golds();
        let mut line = format!("seed {seed}:");
        for method in [pipeline::Method::ZeroShot, pipeline::Method::NoPt, pipeline::Method::Progressive] {
            let mut clf = LinearClassifier::new(cfg.classifier.clone())?;
            let r = pipeline::run_method(method, &corpus.source, &corpus.target, &det, &cfg, &mut clf)?;
            let b = per_bucket_metrics(&r, &golds)?;
            let all = evaluate(&r.final_predictions, &golds)?;
            let x2 = r.pseudo_labels[1].labels.len();
            match method {
                pipeline::Method::ZeroShot => zs = [b[0].metrics.macro_f1, b[1].metrics.macro_f1],
                pipeline::Method::NoPt => { b2[0] = b[1].metrics.macro_f1; totals[0] += all.macro_f1 }
                _ => { b2[1] = b[1].metrics.macro_f1; totals[1] += all.macro_f1 }
            }
            for b in &r.pseudo_labels {
                if b.labels.is_empty() { continue; }
                let right = b.labels.iter().filter(|l| golds[&l.id] == l.label).count();
                let pos = b.labels.iter().filter(|l| l.label == progst::corpus::SentimentLabel::Positive).count();
                line += &format!(" [b{} acc {:.2} pos {}/{}]", b.bucket, right as f64 / b.labels.len() as f64, pos, b.labels.len());
            }
            let pos_pred = r.final_predictions.values().filter(|p| p.label == progst::corpus::SentimentLabel::Positive).count();
            line += &format!(" predpos {pos_pred}");
            line += &format!(
                " {method} all {:.3} B1 {:.3} B2 {:.3} |X2|={x2};",
                all.macro_f1, b[0].metrics.macro_f1, b[1].metrics.macro_f1
            );
        }
        let mut clf = LinearClassifier::new(cfg.classifier.clone())?;
        let probe = pipeline::collect_probe_inputs(&corpus.source, &corpus.target, &det, &cfg, &mut clf)?;
        let ood = probe_ood(&probe, &[0.05])?;
        line += &format!(
            " OOD pt B1 {:.3} B2 {:.3} m1 B2 {:.3}",
            ood.fraction(0.05, PRETRAINED, 1).unwrap(),
            ood.fraction(0.05, PRETRAINED, 2).unwrap(),
            ood.fraction(0.05, FIRST_ITERATION, 2).unwrap()
        );
        if std::env::var("VERBOSE").is_ok() { println!("{line}"); }
        let f = |m, b| ood.fraction(0.05, m, b).unwrap();
        wins[0] += (b2[1] > b2[0]) as usize;
        wins[1] += (zs[0] > zs[1]) as usize;
        wins[2] += (f(PRETRAINED, 2) > f(PRETRAINED, 1)) as usize;
        wins[3] += (f(FIRST_ITERATION, 2) < f(PRETRAINED, 2)) as usize;
        println!("seed {seed}: B2 nopt {:.3} prog {:.3}", b2[0], b2[1]);
    }
    println!("wins prog>nopt B2 {} zs {} ood1 {} ood2 {} | all nopt {:.4} prog {:.4}", wins[0], wins[1], wins[2], wins[3], totals[0] / 5.0, totals[1] / 5.0);
    Ok(())
}
