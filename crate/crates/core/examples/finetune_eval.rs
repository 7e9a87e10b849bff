//! Fine-tunes the desk encoder on a keyword-separable two-class task three
//! times and prints the results table.
//!
//! ```text
//! cargo run --release --example finetune_eval [learning_rate] [epochs] [mlm_steps]
//! ```

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saudi_corpus::eval::{render_table, run_task, EvalConfig, LabeledDataset};
use saudi_corpus::model::{pretrain, ModelConfig, TrainingConfig};
use saudi_corpus::tokenizer::{train_unigram_from_lines, TrainerConfig};

const FILLER: &[&str] = &[
    "الخدمة",
    "اليوم",
    "الفرع",
    "التطبيق",
    "الموظف",
    "الطلب",
    "التوصيل",
    "السعر",
    "المكان",
    "الوقت",
    "الشركة",
    "الرد",
    "العميل",
    "الحساب",
    "الجوال",
    "الطريق",
];
const POSITIVE: &[&str] = &["ممتاز", "رائع", "يجنن", "مره حلو"];
const NEGATIVE: &[&str] = &["سيء", "زفت", "مقرف", "خايس"];

/// 200 short reviews whose class is decided by a single keyword.
fn keyword_dataset(seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..200)
        .map(|i| {
            let label = i % 2;
            let mut words: Vec<&str> = (0..rng.gen_range(3..7))
                .map(|_| *FILLER.choose(&mut rng).unwrap())
                .collect();
            let keyword = if label == 0 { POSITIVE } else { NEGATIVE }
                .choose(&mut rng)
                .unwrap();
            words.insert(rng.gen_range(0..=words.len()), keyword);
            (words.join(" "), label)
        })
        .collect();
    LabeledDataset {
        task_name: "keywords".into(),
        rows,
        label_names: vec!["positive".into(), "negative".into()],
    }
}

fn main() -> saudi_corpus::Result<()> {
    let mut args = std::env::args().skip(1);
    let learning_rate: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2e-3);
    let epochs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let warmup_steps: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);
    let ds = keyword_dataset(1);
    let texts: Vec<&str> = ds.rows.iter().map(|(t, _)| t.as_str()).collect();
    let (vocab, _) = train_unigram_from_lines(
        &texts,
        &TrainerConfig {
            vocab_size: 80,
            ..TrainerConfig::default()
        },
    )?;
    let docs: Vec<Vec<u32>> = texts.iter().map(|t| vocab.encode(t)).collect();

    // A short MLM warm-up gives the encoder a starting point.
    let model = ModelConfig::desk(vocab.size());
    let warmup = TrainingConfig {
        steps: warmup_steps,
        learning_rate: 5e-3,
        batch_size: 16,
        ..TrainingConfig::default()
    };
    let checkpoint = pretrain(&docs, &vocab, &model, &warmup, None)?.checkpoint;

    let cfg = EvalConfig {
        finetune: TrainingConfig {
            learning_rate,
            batch_size: 16,
            epochs,
            ..TrainingConfig::default()
        },
        ..EvalConfig::default()
    };
    let report = run_task(&ds, &checkpoint, &vocab, &cfg)?;
    for run in &report.runs {
        println!(
            "seed {}: accuracy {:.4}, macro-F1 {:.4}",
            run.seed, run.accuracy, run.macro_f1
        );
    }
    println!("best run: seed {}\n", report.seed);
    print!("{}", render_table(&[report])?);
    Ok(())
}
