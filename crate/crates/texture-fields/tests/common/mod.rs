//! Shared test oracles: central finite differences and independent scalar
//! re-implementations of the network forward passes. Everything here
//! deliberately avoids the tape so it can certify it.

#![allow(dead_code)]

use texture_fields::autodiff::{ParamStore, Tensor};
use texture_fields::nets::TextureFieldModel;

pub const FD_STEP: f64 = 1e-3;

/// Central finite difference of `f` w.r.t. one parameter entry.
pub fn central_difference(
    store: &mut ParamStore<f64>,
    param: usize,
    entry: usize,
    mut f: impl FnMut(&ParamStore<f64>) -> f64,
) -> f64 {
    let id = texture_fields::autodiff::ParamId::from_index(param);
    let original = store.get(id).data()[entry];
    store.get_mut(id).data_mut()[entry] = original + FD_STEP;
    let plus = f(store);
    store.get_mut(id).data_mut()[entry] = original - FD_STEP;
    let minus = f(store);
    store.get_mut(id).data_mut()[entry] = original;
    (plus - minus) / (2.0 * FD_STEP)
}

/// Gradcheck comparison: relative error at most `tol`, with an absolute
/// fallback for gradients near zero where the quotient is meaningless.
pub fn grad_close(analytic: f64, numeric: f64, tol: f64) -> bool {
    let diff = (analytic - numeric).abs();
    diff <= tol * analytic.abs().max(numeric.abs()) || diff <= 1e-6
}

fn rows(data: &[f64], cols: usize, r: usize) -> &[f64] {
    &data[r * cols..(r + 1) * cols]
}

fn param<'s>(store: &'s ParamStore<f64>, name: &str) -> &'s Tensor<f64> {
    let id = store
        .lookup(name)
        .unwrap_or_else(|| panic!("missing parameter `{name}`"));
    store.get(id)
}

fn linear(store: &ParamStore<f64>, name: &str, x: &[f64]) -> Vec<f64> {
    let w = param(store, &format!("{name}.w"));
    let (ins, outs) = (w.shape()[0], w.shape()[1]);
    assert_eq!(x.len(), ins, "{name} input width");
    let b = param(store, &format!("{name}.b"));
    let mut out = b.data().to_vec();
    for (i, &xv) in x.iter().enumerate() {
        for (o, &wv) in out.iter_mut().zip(rows(w.data(), outs, i)) {
            *o += xv * wv;
        }
    }
    out
}

fn matmul_row(store: &ParamStore<f64>, name: &str, x: &[f64]) -> Vec<f64> {
    let w = param(store, &format!("{name}.w"));
    let (ins, outs) = (w.shape()[0], w.shape()[1]);
    assert_eq!(x.len(), ins);
    let mut out = vec![0.0; outs];
    for (i, &xv) in x.iter().enumerate() {
        for (o, &wv) in out.iter_mut().zip(rows(w.data(), outs, i)) {
            *o += xv * wv;
        }
    }
    out
}

fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

fn res_block(store: &ParamStore<f64>, name: &str, x: &[f64]) -> Vec<f64> {
    let a = relu(x);
    let a = linear(store, &format!("{name}.fc0"), &a);
    let a = relu(&a);
    let a = linear(store, &format!("{name}.fc1"), &a);
    let skip = if store.lookup(&format!("{name}.skip.w")).is_some() {
        matmul_row(store, &format!("{name}.skip"), x)
    } else {
        x.to_vec()
    };
    skip.iter().zip(&a).map(|(&s, &d)| s + d).collect()
}

/// Scalar re-implementation of the texture field for a single point.
pub fn reference_field_color(
    model: &TextureFieldModel<f64>,
    point: [f64; 3],
    s: &[f64],
    z: &[f64],
) -> [f64; 3] {
    let store = &model.store;
    let cond: Vec<f64> = s.iter().chain(z.iter()).copied().collect();
    let mut h = linear(store, "field.lift", &point);
    for i in 0..model.config.blocks {
        let c = linear(store, &format!("field.block{i}.cond"), &cond);
        for (hv, cv) in h.iter_mut().zip(&c) {
            *hv += cv;
        }
        h = res_block(store, &format!("field.block{i}"), &h);
    }
    let logits = linear(store, "field.out", &h);
    let mut out = [0.0; 3];
    for (o, &l) in out.iter_mut().zip(&logits) {
        *o = 1.0 / (1.0 + (-l).exp());
    }
    out
}

/// Scalar re-implementation of the point-cloud encoder.
pub fn reference_shape_embedding(model: &TextureFieldModel<f64>, cloud: &[[f64; 3]]) -> Vec<f64> {
    let store = &model.store;
    let blocks = 5;
    let mut feats: Vec<Vec<f64>> = cloud
        .iter()
        .map(|p| linear(store, "shape.fc_in", p))
        .collect();
    for i in 0..blocks {
        feats = feats
            .iter()
            .map(|f| res_block(store, &format!("shape.block{i}"), f))
            .collect();
        if i + 1 < blocks {
            let width = feats[0].len();
            let mut pooled = vec![f64::NEG_INFINITY; width];
            for f in &feats {
                for (p, &v) in pooled.iter_mut().zip(f) {
                    *p = p.max(v);
                }
            }
            feats = feats
                .into_iter()
                .map(|mut f| {
                    f.extend_from_slice(&pooled);
                    f
                })
                .collect();
        }
    }
    let width = feats[0].len();
    let mut pooled = vec![f64::NEG_INFINITY; width];
    for f in &feats {
        for (p, &v) in pooled.iter_mut().zip(f) {
            *p = p.max(v);
        }
    }
    linear(store, "shape.fc_out", &relu(&pooled))
}
