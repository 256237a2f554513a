use super::fft::Fft2;
use super::field::SpectralField;
use crate::error::{Error, Result};

/// Smooth radial cutoff: 1 on |xi| <= 1/2, 0 on |xi| >= 3/4, quintic
/// smoothstep ramp in between (C^2 at the joins).
pub fn psi_cutoff(xi: f64) -> f64 {
    let a = xi.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 0.75 {
        0.0
    } else {
        smoothstep((0.75 - a) / 0.25)
    }
}

/// Annulus bump chi(xi) = psi(xi/2) - psi(xi), supported on 1/2 < |xi| < 3/2.
pub fn chi_cutoff(xi: f64) -> f64 {
    psi_cutoff(xi / 2.0) - psi_cutoff(xi)
}

fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}

/// One dyadic frequency block. `m` is 0.5 for the low block and a power of
/// two otherwise; a block with m >= 1 is supported in |xi| in (m/2, 3m/2).
#[derive(Clone)]
pub struct DyadicBlock {
    pub m: f64,
    pub field: SpectralField,
}

/// Dyadic indices 1/2, 1, 2, ..., m_max with m_max the smallest power of two
/// at or above the largest grid frequency, so the partition of unity closes.
pub fn dyadic_indices(xi_max: f64) -> Vec<f64> {
    let mut out = vec![0.5];
    let mut m = 1.0;
    loop {
        out.push(m);
        if m >= xi_max {
            break;
        }
        m *= 2.0;
    }
    out
}

/// Littlewood-Paley decomposition with the radial modulus |xi| = |(k, eta)|.
/// The blocks sum back to `f` exactly because the cutoffs telescope.
pub fn lp_blocks(f: &SpectralField) -> Vec<DyadicBlock> {
    let ms = dyadic_indices(f.grid.xi_max());
    ms.into_iter()
        .map(|m| {
            let field = f.apply_symbol(|k, e| {
                let xi = (k * k + e * e).sqrt();
                let w = if m == 0.5 { psi_cutoff(xi) } else { chi_cutoff(xi / m) };
                w.into()
            });
            DyadicBlock { m, field }
        })
        .collect()
}

/// Paraproduct splitting of the pointwise product f*g:
///
///   T_f g = sum_{N >= 8} f_{<N/8} g_N      (f low, g high)
///   T_g f = sum_{N >= 8} f_N g_{<N/8}      (g low, f high)
///   R     = remaining pairs with block ratio in [1/8, 8]
///
/// where f_{<M} = f_{1/2} + sum_{K < M} f_K. The three parts sum to f*g when
/// the grid has enough margin that the products do not alias.
pub fn paraproduct(
    f: &SpectralField,
    g: &SpectralField,
    fft: &mut Fft2,
) -> Result<(SpectralField, SpectralField, SpectralField)> {
    f.grid.same(&g.grid)?;
    if f.grid != fft.grid() {
        return Err(Error::GridMismatch("paraproduct fft grid".into()));
    }
    let bf = lp_blocks(f);
    let bg = lp_blocks(g);
    let n = bf.len();

    // physical copies of each block and running "everything below" sums
    let mut pf = Vec::with_capacity(n);
    let mut pg = Vec::with_capacity(n);
    for i in 0..n {
        pf.push(fft.inverse(&bf[i].field)?);
        pg.push(fft.inverse(&bg[i].field)?);
    }
    // below[i] = sum of blocks with index < i (strictly lower dyadic range)
    let len = f.grid.len();
    let mut below_f = vec![vec![0.0; len]];
    let mut below_g = vec![vec![0.0; len]];
    for i in 0..n {
        let mut nf = below_f[i].clone();
        let mut ng = below_g[i].clone();
        for j in 0..len {
            nf[j] += pf[i].v[j];
            ng[j] += pg[i].v[j];
        }
        below_f.push(nf);
        below_g.push(ng);
    }

    let mut t_fg = vec![0.0; len];
    let mut t_gf = vec![0.0; len];
    let mut rem = vec![0.0; len];

    // block list index i <-> m = 0.5 for i = 0, else 2^{i-1}; N/8 keeps
    // exactly the blocks with list index <= i - 4.
    for i in 0..n {
        if bf[i].m >= 8.0 {
            let lo = &below_g[i - 3]; // g blocks with index < i-3, i.e. <= i-4
            for j in 0..len {
                t_gf[j] += pf[i].v[j] * lo[j];
            }
            let lo = &below_f[i - 3];
            for j in 0..len {
                t_fg[j] += lo[j] * pg[i].v[j];
            }
        }
        for (jb, gb) in bg.iter().enumerate() {
            let ratio = gb.m / bf[i].m;
            if (0.125..=8.0).contains(&ratio) {
                for j in 0..len {
                    rem[j] += pf[i].v[j] * pg[jb].v[j];
                }
            }
        }
    }

    let to_spec = |v: Vec<f64>, fft: &mut Fft2| {
        let p = super::field::PhysicalField { grid: f.grid, v };
        fft.forward(&p)
    };
    Ok((to_spec(t_fg, fft)?, to_spec(t_gf, fft)?, to_spec(rem, fft)?))
}
