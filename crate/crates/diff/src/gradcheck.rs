//! Central finite-difference verification of tape gradients.

use crate::params::ParamStore;

/// Worst relative error between the gradients currently accumulated in
/// `store` and central finite differences of `loss` over every scalar of
/// every parameter, with the location of the worst disagreement. The
/// step is `1e-6 * max(1, |p|)`. `loss` must be a pure function of the
/// store (same randomness, same structure).
pub fn max_rel_error_verbose(
    store: &mut ParamStore,
    mut loss: impl FnMut(&ParamStore) -> f64,
) -> (f64, String) {
    let mut worst = 0.0f64;
    let mut location = String::new();
    for id in store.ids().collect::<Vec<_>>() {
        let n = store.data(id).len();
        for k in 0..n {
            let original = store.data(id)[k];
            let h = 1e-6 * original.abs().max(1.0);
            store.data_mut(id)[k] = original + h;
            let up = loss(store);
            store.data_mut(id)[k] = original - h;
            let down = loss(store);
            store.data_mut(id)[k] = original;
            let numeric = (up - down) / (2.0 * h);
            let analytic = store.grad(id)[k];
            // The denominator floor turns the check into an absolute one
            // below 1e-5: central differences carry ~1e-10 of roundoff
            // when the loss is O(1), which would otherwise dominate the
            // ratio for near-zero gradients.
            let denom = analytic.abs().max(numeric.abs()).max(1e-5);
            let rel = (analytic - numeric).abs() / denom;
            if rel > worst {
                worst = rel;
                location = format!(
                    "{}[{}]: analytic {analytic:.3e} vs numeric {numeric:.3e}",
                    store.name(id),
                    k
                );
            }
        }
    }
    (worst, location)
}

/// See [`max_rel_error_verbose`].
pub fn max_rel_error(store: &mut ParamStore, loss: impl FnMut(&ParamStore) -> f64) -> f64 {
    max_rel_error_verbose(store, loss).0
}
