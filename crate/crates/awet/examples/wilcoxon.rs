//! Paired Wilcoxon signed-rank test: exact small-sample p-values, the normal
//! approximation, and the all-positive-differences textbook case.
//!
//! ```bash
//! cargo run --example wilcoxon
//! ```

use awet::bench::{wilcoxon_signed_rank, wilcoxon_signed_rank_with, WilcoxonMethod};

fn main() -> awet::Result<()> {
    // Five runs where method A beat method B every time: the strongest
    // one-sided evidence five pairs can give is p = 1/32.
    let a = [0.92, 0.88, 0.95, 0.90, 0.97];
    let b = [0.85, 0.80, 0.91, 0.84, 0.90];
    let r = wilcoxon_signed_rank(&a, &b)?;
    println!("five wins out of five:");
    println!(
        "  W+ = {}, one-sided p = {:.5} (= 1/32), two-sided p = {:.5}",
        r.w_plus, r.p_one_sided, r.p_two_sided
    );

    // A mixed outcome over twelve paired seeds.
    let a = [
        0.84, 0.79, 0.91, 0.88, 0.76, 0.95, 0.83, 0.90, 0.87, 0.92, 0.81, 0.89,
    ];
    let b = [
        0.80, 0.82, 0.85, 0.81, 0.77, 0.90, 0.79, 0.85, 0.88, 0.86, 0.78, 0.84,
    ];
    let exact = wilcoxon_signed_rank_with(&a, &b, WilcoxonMethod::Exact)?;
    let approx = wilcoxon_signed_rank_with(&a, &b, WilcoxonMethod::NormalApprox)?;
    println!("twelve paired seeds:");
    println!(
        "  exact:  W+ = {:4.1}, one-sided p = {:.4}",
        exact.w_plus, exact.p_one_sided
    );
    println!(
        "  approx: W+ = {:4.1}, one-sided p = {:.4}",
        approx.w_plus, approx.p_one_sided
    );
    Ok(())
}
