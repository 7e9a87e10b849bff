//! Scaled dot-product attention, the multi-head special case and the
//! sinusoidal position table, checked against closed forms.
//!
//! ```text
//! cargo run --example attention_math
//! ```

use saudi_corpus::model::{
    multi_head_attention, positional_encoding, scaled_dot_attention_with_weights, AttentionInputs,
    Matrix, MultiHeadParams,
};

fn show(name: &str, m: &Matrix) {
    println!("{name}:");
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|x| format!("{x:+.6}")).collect();
        println!("  [{}]", row.join(", "));
    }
}

fn main() -> saudi_corpus::Result<()> {
    let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
    let (out, weights) =
        scaled_dot_attention_with_weights(&AttentionInputs::new(x.clone(), x.clone(), x.clone())?)?;
    show("attention weights for Q = K = V = I₂", &weights);
    show("output", &out);
    let s = 1.0 / 2f64.sqrt();
    let by_hand = s.exp() / (s.exp() + 1.0);
    println!("closed form of the diagonal weight: e^(1/√2) / (e^(1/√2) + 1) = {by_hand:.6}\n");

    let multi = multi_head_attention(&x, &MultiHeadParams::identity(2, 1)?)?;
    println!(
        "one head with identity projections reproduces it exactly: {}\n",
        multi == out
    );

    let table = positional_encoding(6, 8)?;
    println!("positional table, 6 positions × 8 dimensions:");
    for p in 0..table.max_positions() {
        let row: Vec<String> = table.row(p).iter().map(|x| format!("{x:+.3}")).collect();
        println!("  p={p}: {}", row.join(" "));
    }
    Ok(())
}
