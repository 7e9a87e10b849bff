//! Small labelled datasets with a known answer.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saudi_corpus::eval::LabeledDataset;

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

/// 200 short reviews whose class is decided by a single keyword; the two
/// classes alternate, so the set is balanced.
pub fn keyword_dataset(seed: u64) -> LabeledDataset {
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

/// Writes `ds` as a `text,label` CSV with label names in the label column.
pub fn write_csv(ds: &LabeledDataset, path: &Path) {
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(["text", "label"]).unwrap();
    for (text, label) in &ds.rows {
        w.write_record([text.as_str(), ds.label_names[*label].as_str()])
            .unwrap();
    }
    w.flush().unwrap();
}
