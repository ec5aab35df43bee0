//! Forward pass, masked cross-entropy, and hand-written backward pass of a
//! pre-norm GPT-2 style decoder.
//!
//! Per block: `x += Wo·attn(LN1(x))`, then `x += W2·gelu(W1·LN2(x))`.
//! Attention is multi-head scaled dot-product with a causal mask. A final
//! layer norm feeds the output head. Activations are row-major
//! `[positions x width]`.

use rayon::prelude::*;

use super::linalg::{gemm, MatMut, MatRef, Scalar};
use super::params::{Gradients, LayerTensor as L, Layout, ModelConfig, ModelParams, WPE, WTE};
use crate::error::{Error, Result};
use crate::prompt::{TrainingItem, VOCAB_SIZE};

const LN_EPS: f64 = 1e-5;

/// Items per gradient accumulation buffer. Fixed so that the floating-point
/// summation order, and hence the result, does not depend on thread count.
const BATCH_CHUNK: usize = 16;

struct NormCache<T> {
    xhat: Vec<T>,
    rstd: Vec<T>,
}

struct LayerCache<T> {
    ln1: NormCache<T>,
    h1: Vec<T>,
    q: Vec<T>,
    k: Vec<T>,
    v: Vec<T>,
    /// `heads x n x n`, zero above the diagonal.
    probs: Vec<T>,
    attn: Vec<T>,
    ln2: NormCache<T>,
    h2: Vec<T>,
    pre: Vec<T>,
    act: Vec<T>,
}

struct Cache<T> {
    layers: Vec<LayerCache<T>>,
    lnf: NormCache<T>,
    hf: Vec<T>,
    logits: Vec<T>,
}

fn check_tokens(config: &ModelConfig, tokens: &[u8]) -> Result<()> {
    if tokens.len() > config.context_length {
        return Err(Error::invalid(format!(
            "sequence of {} tokens exceeds context length {}",
            tokens.len(),
            config.context_length
        )));
    }
    if let Some(t) = tokens.iter().find(|&&t| t as usize >= VOCAB_SIZE) {
        return Err(Error::invalid(format!("token {t} outside vocabulary")));
    }
    Ok(())
}

fn layer_norm<T: Scalar>(x: &[T], g: &[T], b: &[T], d: usize) -> (Vec<T>, NormCache<T>) {
    let n = x.len() / d;
    let mut y = vec![T::zero(); x.len()];
    let mut xhat = vec![T::zero(); x.len()];
    let mut rstd = vec![T::zero(); n];
    let inv_d = T::from_f64(1.0 / d as f64);
    let eps = T::from_f64(LN_EPS);
    for t in 0..n {
        let row = &x[t * d..(t + 1) * d];
        let mean = row.iter().copied().sum::<T>() * inv_d;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() * inv_d;
        let r = (var + eps).sqrt().recip();
        rstd[t] = r;
        for i in 0..d {
            let xh = (row[i] - mean) * r;
            xhat[t * d + i] = xh;
            y[t * d + i] = xh * g[i] + b[i];
        }
    }
    (y, NormCache { xhat, rstd })
}

/// Returns `dx`; accumulates `dg` and `db`.
fn layer_norm_backward<T: Scalar>(
    dy: &[T],
    cache: &NormCache<T>,
    g: &[T],
    dg: &mut [T],
    db: &mut [T],
    d: usize,
) -> Vec<T> {
    let n = dy.len() / d;
    let mut dx = vec![T::zero(); dy.len()];
    let inv_d = T::from_f64(1.0 / d as f64);
    let mut dxhat = vec![T::zero(); d];
    for t in 0..n {
        let dyr = &dy[t * d..(t + 1) * d];
        let xh = &cache.xhat[t * d..(t + 1) * d];
        let mut mean_dxhat = T::zero();
        let mut mean_dxhat_xhat = T::zero();
        for i in 0..d {
            dg[i] = dg[i] + dyr[i] * xh[i];
            db[i] = db[i] + dyr[i];
            dxhat[i] = dyr[i] * g[i];
            mean_dxhat = mean_dxhat + dxhat[i];
            mean_dxhat_xhat = mean_dxhat_xhat + dxhat[i] * xh[i];
        }
        mean_dxhat = mean_dxhat * inv_d;
        mean_dxhat_xhat = mean_dxhat_xhat * inv_d;
        let r = cache.rstd[t];
        for i in 0..d {
            dx[t * d + i] = r * (dxhat[i] - mean_dxhat - xh[i] * mean_dxhat_xhat);
        }
    }
    dx
}

/// `x @ w + b` for row-major `x: [n x k]`, `w: [k x m]`.
fn linear<T: Scalar>(x: &[T], w: &[T], b: &[T], n: usize, k: usize, m: usize) -> Vec<T> {
    let mut y: Vec<T> = b.iter().copied().cycle().take(n * m).collect();
    gemm(T::one(), MatRef::new(x, n, k), MatRef::new(w, k, m), T::one(), MatMut::new(&mut y, n, m));
    y
}

/// Accumulates `dw += x^T dy`, `db += colsum(dy)` and returns `dx = dy w^T`.
#[allow(clippy::too_many_arguments)]
fn linear_backward<T: Scalar>(
    dy: &[T],
    x: &[T],
    w: &[T],
    dw: &mut [T],
    db: &mut [T],
    n: usize,
    k: usize,
    m: usize,
) -> Vec<T> {
    gemm(T::one(), MatRef::new(x, n, k).t(), MatRef::new(dy, n, m), T::one(), MatMut::new(dw, k, m));
    col_sum_into(dy, db, m);
    let mut dx = vec![T::zero(); n * k];
    gemm(T::one(), MatRef::new(dy, n, m), MatRef::new(w, k, m).t(), T::zero(), MatMut::new(&mut dx, n, k));
    dx
}

fn col_sum_into<T: Scalar>(x: &[T], acc: &mut [T], m: usize) {
    for row in x.chunks_exact(m) {
        for (a, &v) in acc.iter_mut().zip(row) {
            *a = *a + v;
        }
    }
}

fn add_into<T: Scalar>(acc: &mut [T], x: &[T]) {
    for (a, &v) in acc.iter_mut().zip(x) {
        *a = *a + v;
    }
}

// tanh approximation of GELU, as in GPT-2
fn gelu<T: Scalar>(x: T) -> T {
    let c = T::from_f64((2.0 / std::f64::consts::PI).sqrt());
    let k = T::from_f64(0.044715);
    let half = T::from_f64(0.5);
    half * x * (T::one() + (c * (x + k * x * x * x)).tanh())
}

fn gelu_grad<T: Scalar>(x: T) -> T {
    let c = T::from_f64((2.0 / std::f64::consts::PI).sqrt());
    let k = T::from_f64(0.044715);
    let half = T::from_f64(0.5);
    let th = (c * (x + k * x * x * x)).tanh();
    half * (T::one() + th) + half * x * (T::one() - th * th) * c * (T::one() + T::from_f64(3.0) * k * x * x)
}

fn forward_cached<T: Scalar>(params: &ModelParams<T>, tokens: &[u8]) -> Result<Cache<T>> {
    let c = *params.config();
    check_tokens(&c, tokens)?;
    let lay = Layout::new(&c);
    let (n, d, nh, dh, hd) = (tokens.len(), c.embed_dim, c.heads, c.head_dim(), c.hidden_dim());
    let p = |i: usize| params.tensor(i);
    let scale = T::from_f64(1.0 / (dh as f64).sqrt());

    let mut x = vec![T::zero(); n * d];
    let (wte, wpe) = (p(WTE), p(WPE));
    for (t, &tok) in tokens.iter().enumerate() {
        let tok = tok as usize;
        for i in 0..d {
            x[t * d + i] = wte[tok * d + i] + wpe[t * d + i];
        }
    }

    let mut layers = Vec::with_capacity(c.layers);
    for l in 0..c.layers {
        let w = |t: L| p(lay.layer(l, t));
        let (h1, ln1) = layer_norm(&x, w(L::Ln1G), w(L::Ln1B), d);
        let q = linear(&h1, w(L::Wq), w(L::Bq), n, d, d);
        let k = linear(&h1, w(L::Wk), w(L::Bk), n, d, d);
        let v = linear(&h1, w(L::Wv), w(L::Bv), n, d, d);

        let mut probs = vec![T::zero(); nh * n * n];
        let mut attn = vec![T::zero(); n * d];
        for h in 0..nh {
            let s = &mut probs[h * n * n..(h + 1) * n * n];
            gemm(
                scale,
                MatRef::cols_of(&q, n, d, h * dh, dh),
                MatRef::cols_of(&k, n, d, h * dh, dh).t(),
                T::zero(),
                MatMut::new(s, n, n),
            );
            for i in 0..n {
                let row = &mut s[i * n..(i + 1) * n];
                let max = row[..=i].iter().copied().fold(T::neg_infinity(), T::max);
                let mut sum = T::zero();
                for e in &mut row[..=i] {
                    *e = (*e - max).exp();
                    sum = sum + *e;
                }
                let inv = sum.recip();
                for e in &mut row[..=i] {
                    *e = *e * inv;
                }
                row[i + 1..].fill(T::zero());
            }
            gemm(
                T::one(),
                MatRef::new(s, n, n),
                MatRef::cols_of(&v, n, d, h * dh, dh),
                T::zero(),
                MatMut::cols_of(&mut attn, n, d, h * dh, dh),
            );
        }
        let a = linear(&attn, w(L::Wo), w(L::Bo), n, d, d);
        add_into(&mut x, &a);

        let (h2, ln2) = layer_norm(&x, w(L::Ln2G), w(L::Ln2B), d);
        let pre = linear(&h2, w(L::WFc), w(L::BFc), n, d, hd);
        let act: Vec<T> = pre.iter().map(|&u| gelu(u)).collect();
        let m = linear(&act, w(L::WProj), w(L::BProj), n, hd, d);
        add_into(&mut x, &m);

        layers.push(LayerCache { ln1, h1, q, k, v, probs, attn, ln2, h2, pre, act });
    }

    let (hf, lnf) = layer_norm(&x, p(lay.lnf_g()), p(lay.lnf_b()), d);
    let logits = match lay.head_w() {
        Some(hw) => linear(&hf, p(hw), p(lay.head_b()), n, d, VOCAB_SIZE),
        None => {
            let mut y: Vec<T> = p(lay.head_b()).iter().copied().cycle().take(n * VOCAB_SIZE).collect();
            gemm(
                T::one(),
                MatRef::new(&hf, n, d),
                MatRef::new(wte, VOCAB_SIZE, d).t(),
                T::one(),
                MatMut::new(&mut y, n, VOCAB_SIZE),
            );
            y
        }
    };
    Ok(Cache { layers, lnf, hf, logits })
}

/// Next-token logits, `[tokens.len() x 26]` row-major.
pub fn forward<T: Scalar>(params: &ModelParams<T>, tokens: &[u8]) -> Result<Vec<T>> {
    Ok(forward_cached(params, tokens)?.logits)
}

/// Softmax of one row of logits, with max subtraction.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let inv = exps.iter().copied().sum::<T>().recip();
    exps.into_iter().map(|e| e * inv).collect()
}

fn cross_entropy<T: Scalar>(row: &[T], target: u8) -> T {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = row.iter().map(|&z| (z - max).exp()).sum::<T>().ln() + max;
    lse - row[target as usize]
}

fn check_targets(n: usize, targets: &[u8], mask: &[bool]) -> Result<usize> {
    if targets.len() != n || mask.len() != n {
        return Err(Error::invalid(format!(
            "{} positions but {} targets and {} mask entries",
            n,
            targets.len(),
            mask.len()
        )));
    }
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(Error::invalid("loss mask selects no positions"));
    }
    if let Some((t, _)) = targets.iter().zip(mask).find(|(&t, &m)| m && t as usize >= VOCAB_SIZE) {
        return Err(Error::invalid(format!("target {t} outside vocabulary")));
    }
    Ok(count)
}

/// Sum of cross-entropies over masked positions, and their count.
fn masked_loss_sum<T: Scalar>(logits: &[T], targets: &[u8], mask: &[bool]) -> Result<(T, usize)> {
    let n = logits.len() / VOCAB_SIZE;
    let count = check_targets(n, targets, mask)?;
    let sum = logits
        .chunks_exact(VOCAB_SIZE)
        .zip(targets.iter().zip(mask))
        .filter(|(_, (_, &m))| m)
        .map(|(row, (&t, _))| cross_entropy(row, t))
        .sum();
    Ok((sum, count))
}

/// Mean cross-entropy over the positions where `mask` is true.
pub fn masked_loss<T: Scalar>(logits: &[T], targets: &[u8], mask: &[bool]) -> Result<T> {
    let (sum, count) = masked_loss_sum(logits, targets, mask)?;
    Ok(sum / T::from_f64(count as f64))
}

/// Runs forward and backward for one sequence, adding `scale * d(loss sum)`
/// into `grads`. Returns the unscaled loss sum over masked positions.
fn accumulate_sequence<T: Scalar>(
    params: &ModelParams<T>,
    tokens: &[u8],
    targets: &[u8],
    mask: &[bool],
    scale: T,
    grads: &mut Gradients<T>,
) -> Result<T> {
    let c = *params.config();
    let lay = Layout::new(&c);
    let cache = forward_cached(params, tokens)?;
    let (n, d, nh, dh, hd) = (tokens.len(), c.embed_dim, c.heads, c.head_dim(), c.hidden_dim());
    let (loss_sum, _) = masked_loss_sum(&cache.logits, targets, mask)?;
    let p = |i: usize| params.tensor(i);
    let att_scale = T::from_f64(1.0 / (dh as f64).sqrt());

    let mut dlogits = vec![T::zero(); n * VOCAB_SIZE];
    for t in 0..n {
        if !mask[t] {
            continue;
        }
        let probs = softmax(&cache.logits[t * VOCAB_SIZE..(t + 1) * VOCAB_SIZE]);
        for (j, pj) in probs.into_iter().enumerate() {
            let onehot = if j == targets[t] as usize { T::one() } else { T::zero() };
            dlogits[t * VOCAB_SIZE + j] = (pj - onehot) * scale;
        }
    }

    let g = grads.tensors_mut();
    let dhf = match lay.head_w() {
        Some(hw) => {
            let (dw, db) = two_mut(g, hw, lay.head_b());
            linear_backward(&dlogits, &cache.hf, p(hw), dw, db, n, d, VOCAB_SIZE)
        }
        None => {
            col_sum_into(&dlogits, &mut g[lay.head_b()], VOCAB_SIZE);
            // logits = hf wte^T
            gemm(
                T::one(),
                MatRef::new(&dlogits, n, VOCAB_SIZE).t(),
                MatRef::new(&cache.hf, n, d),
                T::one(),
                MatMut::new(&mut g[WTE], VOCAB_SIZE, d),
            );
            let mut dx = vec![T::zero(); n * d];
            gemm(
                T::one(),
                MatRef::new(&dlogits, n, VOCAB_SIZE),
                MatRef::new(p(WTE), VOCAB_SIZE, d),
                T::zero(),
                MatMut::new(&mut dx, n, d),
            );
            dx
        }
    };
    let (gi, bi) = (lay.lnf_g(), lay.lnf_b());
    let (dgf, dbf) = two_mut(g, gi, bi);
    let mut dx = layer_norm_backward(&dhf, &cache.lnf, p(gi), dgf, dbf, d);

    for l in (0..c.layers).rev() {
        let lc = &cache.layers[l];
        let w = |t: L| p(lay.layer(l, t));
        let idx = |t: L| lay.layer(l, t);

        // MLP branch
        let (dw, db) = two_mut(g, idx(L::WProj), idx(L::BProj));
        let dact = linear_backward(&dx, &lc.act, w(L::WProj), dw, db, n, hd, d);
        let dpre: Vec<T> = dact.iter().zip(&lc.pre).map(|(&da, &u)| da * gelu_grad(u)).collect();
        let (dw, db) = two_mut(g, idx(L::WFc), idx(L::BFc));
        let dh2 = linear_backward(&dpre, &lc.h2, w(L::WFc), dw, db, n, d, hd);
        let (dg, db) = two_mut(g, idx(L::Ln2G), idx(L::Ln2B));
        add_into(&mut dx, &layer_norm_backward(&dh2, &lc.ln2, w(L::Ln2G), dg, db, d));

        // attention branch
        let (dw, db) = two_mut(g, idx(L::Wo), idx(L::Bo));
        let dattn = linear_backward(&dx, &lc.attn, w(L::Wo), dw, db, n, d, d);
        let mut dq = vec![T::zero(); n * d];
        let mut dk = vec![T::zero(); n * d];
        let mut dv = vec![T::zero(); n * d];
        let mut ds = vec![T::zero(); n * n];
        for h in 0..nh {
            let probs = &lc.probs[h * n * n..(h + 1) * n * n];
            let dattn_h = MatRef::cols_of(&dattn, n, d, h * dh, dh);
            // dP = dattn_h v_h^T
            gemm(
                T::one(),
                dattn_h,
                MatRef::cols_of(&lc.v, n, d, h * dh, dh).t(),
                T::zero(),
                MatMut::new(&mut ds, n, n),
            );
            // dv_h = P^T dattn_h
            gemm(
                T::one(),
                MatRef::new(probs, n, n).t(),
                dattn_h,
                T::zero(),
                MatMut::cols_of(&mut dv, n, d, h * dh, dh),
            );
            // softmax backward, row by row over the causal part
            for i in 0..n {
                let pr = &probs[i * n..(i + 1) * n];
                let dr = &mut ds[i * n..(i + 1) * n];
                let dot = (0..=i).map(|j| pr[j] * dr[j]).sum::<T>();
                for j in 0..=i {
                    dr[j] = pr[j] * (dr[j] - dot);
                }
                dr[i + 1..].fill(T::zero());
            }
            gemm(
                att_scale,
                MatRef::new(&ds, n, n),
                MatRef::cols_of(&lc.k, n, d, h * dh, dh),
                T::zero(),
                MatMut::cols_of(&mut dq, n, d, h * dh, dh),
            );
            gemm(
                att_scale,
                MatRef::new(&ds, n, n).t(),
                MatRef::cols_of(&lc.q, n, d, h * dh, dh),
                T::zero(),
                MatMut::cols_of(&mut dk, n, d, h * dh, dh),
            );
        }
        let (dw, db) = two_mut(g, idx(L::Wq), idx(L::Bq));
        let mut dh1 = linear_backward(&dq, &lc.h1, w(L::Wq), dw, db, n, d, d);
        let (dw, db) = two_mut(g, idx(L::Wk), idx(L::Bk));
        add_into(&mut dh1, &linear_backward(&dk, &lc.h1, w(L::Wk), dw, db, n, d, d));
        let (dw, db) = two_mut(g, idx(L::Wv), idx(L::Bv));
        add_into(&mut dh1, &linear_backward(&dv, &lc.h1, w(L::Wv), dw, db, n, d, d));
        let (dg, db) = two_mut(g, idx(L::Ln1G), idx(L::Ln1B));
        add_into(&mut dx, &layer_norm_backward(&dh1, &lc.ln1, w(L::Ln1G), dg, db, d));
    }

    for (t, &tok) in tokens.iter().enumerate() {
        let row = &dx[t * d..(t + 1) * d];
        add_into(&mut g[WTE][tok as usize * d..(tok as usize + 1) * d], row);
        add_into(&mut g[WPE][t * d..(t + 1) * d], row);
    }
    Ok(loss_sum)
}

fn two_mut<T>(v: &mut [Vec<T>], a: usize, b: usize) -> (&mut [T], &mut [T]) {
    assert!(a < b);
    let (lo, hi) = v.split_at_mut(b);
    (&mut lo[a], &mut hi[0])
}

/// Masked mean loss of one sequence and its exact gradient.
pub fn backward<T: Scalar>(
    params: &ModelParams<T>,
    tokens: &[u8],
    targets: &[u8],
    mask: &[bool],
) -> Result<(T, Gradients<T>)> {
    check_tokens(params.config(), tokens)?;
    let count = check_targets(tokens.len(), targets, mask)?;
    let mut grads = ModelParams::zeros(*params.config())?;
    let scale = T::from_f64(1.0 / count as f64);
    let sum = accumulate_sequence(params, tokens, targets, mask, scale, &mut grads)?;
    Ok((sum * scale, grads))
}

fn batch_count(items: &[TrainingItem]) -> Result<usize> {
    if items.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let count: usize = items.iter().map(TrainingItem::masked_count).sum();
    if count == 0 {
        return Err(Error::invalid("loss mask selects no positions"));
    }
    Ok(count)
}

/// Mean loss over every masked position of the batch, with its gradient.
///
/// Items are processed in parallel in fixed-size chunks whose partial sums
/// are combined in order, so the result is identical for any thread count.
pub fn batch_loss_and_grad<T: Scalar>(
    params: &ModelParams<T>,
    items: &[TrainingItem],
) -> Result<(T, Gradients<T>)> {
    let count = batch_count(items)?;
    let scale = T::from_f64(1.0 / count as f64);
    let partials: Vec<(T, Gradients<T>)> = items
        .par_chunks(BATCH_CHUNK)
        .map(|chunk| {
            let mut g = ModelParams::zeros(*params.config())?;
            let mut sum = T::zero();
            for it in chunk {
                sum = sum
                    + accumulate_sequence(params, it.tokens.as_slice(), &it.targets, &it.loss_mask, scale, &mut g)?;
            }
            Ok((sum, g))
        })
        .collect::<Result<_>>()?;
    let mut iter = partials.into_iter();
    let (mut sum, mut grads) = iter.next().expect("non-empty batch");
    for (s, g) in iter {
        sum = sum + s;
        grads.add_assign(&g);
    }
    Ok((sum * scale, grads))
}

/// Mean loss over every masked position of the batch (forward only).
pub fn batch_loss<T: Scalar>(params: &ModelParams<T>, items: &[TrainingItem]) -> Result<T> {
    let count = batch_count(items)?;
    let sums: Vec<T> = items
        .par_iter()
        .map(|it| {
            let logits = forward(params, it.tokens.as_slice())?;
            Ok(masked_loss_sum(&logits, &it.targets, &it.loss_mask)?.0)
        })
        .collect::<Result<_>>()?;
    Ok(sums.into_iter().fold(T::zero(), |a, b| a + b) / T::from_f64(count as f64))
}
