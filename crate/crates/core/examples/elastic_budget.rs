//! Borrowing and repaying transmission time over a bandwidth dip.
//!
//!     cargo run --example elastic_budget

use roistream::elastic::{elastic_adjust, ema_update, ElasticConfig, ElasticState};

fn main() {
    let cfg = ElasticConfig::default();
    let mut state = ElasticState::new(900.0, 1600.0, 1500.0).warm_start(&[0.8, 0.9, 0.85, 0.8], &cfg);
    // (total ROI area, bandwidth kbps)
    let slots = [
        (0.80, 1200.0),
        (1.40, 700.0),
        (1.50, 500.0),
        (1.60, 400.0),
        (1.30, 600.0),
        (0.90, 1300.0),
        (0.85, 2100.0),
        (0.80, 2400.0),
        (0.80, 1900.0),
    ];
    println!("slot  area  W      tau_a  D        budget  used");
    for (t, &(a, w)) in slots.iter().enumerate() {
        state = ema_update(state, a, &cfg);
        let tau_a = state.tau_a;
        let (adj, next) = elastic_adjust(state, a, w, &cfg);
        state = next;
        println!(
            "{t:>4}  {a:.2}  {w:>5}  {tau_a:.3}  {:>+7.1}  {:>6.1}  {:.1}",
            adj.d_kbit, adj.effective_budget_kbps, state.budget_used
        );
    }
}
