//! Chebyshev-basis polynomials and their roots.
//!
//! Roots come from the eigenvalues of the colleague matrix (the Chebyshev
//! analogue of the companion matrix), computed with a balanced Francis
//! double-shift QR iteration written here so this route shares no code with the
//! dense eigensolver used on the transfer matrix itself.
//!
//! Multiple roots scatter into rings of radius `~η^{1/s}` under rounding, so
//! multiplicities are not read off from raw distances. Candidate groups are
//! formed by single-linkage at decreasing radii, and a group of size `s` is
//! accepted only if the first `s` Taylor coefficients of the polynomial at the
//! group mean vanish relative to their natural scale.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Relative tolerance on Taylor coefficients for accepting a multiple root.
pub const MULTIPLICITY_TOL: f64 = 1e-13;
/// Distance from `±1` below which a real root is snapped onto the zone boundary.
pub const EDGE_TOL: f64 = 1e-9;
/// Snapping distance to `±1` for Newton-polished simple roots.
pub const SIMPLE_EDGE_TOL: f64 = 1e-12;
/// Raw roots closer than this are flagged as ill-conditioned.
pub const ILL_CONDITIONED_GAP: f64 = 1e-10;

const QR_MAX_SWEEPS: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("Hessenberg QR failed to converge within {sweeps} sweeps on a block of size {block}")]
    NoConvergence { sweeps: usize, block: usize },
}

/// A real polynomial in the first-kind Chebyshev basis, `Σ c_k T_k(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChebyshevSeries {
    coeffs: Vec<f64>,
}

impl ChebyshevSeries {
    /// Trailing zero coefficients are trimmed (a zero series keeps one entry).
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    /// Convert `Σ b_k U_k(x)` (second kind) to the first-kind basis using
    /// `U_k = 2 Σ_{j≡k (2), 0<j≤k} T_j + [k even] T_0`.
    pub fn from_second_kind(b: &[f64]) -> Self {
        let mut c = vec![0.0; b.len().max(1)];
        for (k, &bk) in b.iter().enumerate() {
            let mut j = k;
            loop {
                if j == 0 {
                    c[0] += bk;
                    break;
                }
                c[j] += 2.0 * bk;
                if j < 2 {
                    break;
                }
                j -= 2;
            }
        }
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        clenshaw(&self.coeffs, x)
    }

    pub fn to_monomial(&self) -> Vec<f64> {
        chebyshev_to_monomial(&self.coeffs)
    }
}

/// Clenshaw recurrence for `Σ c_k T_k(x)`.
pub fn clenshaw(c: &[f64], x: Complex64) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    let (mut b1, mut b2) = (zero, zero);
    for &ck in c.iter().skip(1).rev() {
        let b0 = x * b1 * 2.0 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    x * b1 - b2 + c[0]
}

/// Integer coefficient table of `T_0..T_n` in the monomial basis.
fn chebyshev_table(n: usize) -> Vec<Vec<i128>> {
    let mut table: Vec<Vec<i128>> = vec![vec![1]];
    if n >= 1 {
        table.push(vec![0, 1]);
    }
    for m in 2..=n {
        let mut next = vec![0i128; m + 1];
        for (i, &a) in table[m - 1].iter().enumerate() {
            next[i + 1] += 2 * a;
        }
        for (i, &a) in table[m - 2].iter().enumerate() {
            next[i] -= a;
        }
        table.push(next);
    }
    table
}

/// Monomial coefficients (lowest degree first) of `Σ c_k T_k(x)`.
pub fn chebyshev_to_monomial(c: &[f64]) -> Vec<f64> {
    let n = c.len() - 1;
    let table = chebyshev_table(n);
    let mut out = vec![0.0; n + 1];
    for (k, &ck) in c.iter().enumerate() {
        for (i, &a) in table[k].iter().enumerate() {
            out[i] += ck * a as f64;
        }
    }
    out
}

/// Horner evaluation of a monomial polynomial and its first derivative.
fn horner_with_derivative(a: &[f64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &ai in a.iter().rev() {
        dp = dp * x + p;
        p = p * x + ai;
    }
    (p, dp)
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut b = 1.0;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b
}

/// `P^{(j)}(c)/j!` and the size of the terms summed, measured at `max(1, |c|)`
/// so that rounding in the constant term (the energy) is covered for small `c`.
fn taylor_coefficient(a: &[f64], c: Complex64, j: usize) -> (Complex64, f64) {
    let mut value = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    let cabs = c.norm().max(1.0);
    for (i, &ai) in a.iter().enumerate().skip(j) {
        let b = binomial(i, j);
        value += c.powu((i - j) as u32) * (ai * b);
        scale += ai.abs() * b * cabs.powi((i - j) as i32);
    }
    (value, scale)
}

/// Whether `center` is a root of multiplicity at least `s` to working accuracy.
pub fn is_multiple_root(monomial: &[f64], center: Complex64, s: usize) -> bool {
    (0..s).all(|j| {
        let (v, scale) = taylor_coefficient(monomial, center, j);
        v.norm() <= MULTIPLICITY_TOL * scale.max(f64::MIN_POSITIVE)
    })
}

/// Colleague matrix, transposed so it is upper Hessenberg. Row-major, `n × n`.
fn colleague_hessenberg(c: &[f64]) -> Vec<f64> {
    let n = c.len() - 1;
    let lead = c[n];
    // M with x·[T_0..T_{n-1}] = M·[T_0..T_{n-1}], then H = Mᵀ.
    let mut m = vec![0.0; n * n];
    m[1] = 1.0;
    for k in 1..n {
        m[k * n + k - 1] += 0.5;
        if k + 1 < n {
            m[k * n + k + 1] += 0.5;
        }
    }
    for j in 0..n {
        m[(n - 1) * n + j] -= c[j] / (2.0 * lead);
    }
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] = m[j * n + i];
        }
    }
    h
}

/// Raw eigenvalues of the colleague matrix: the roots of `Σ c_k T_k`, unclustered.
pub fn colleague_roots(series: &ChebyshevSeries) -> Result<Vec<Complex64>, RootError> {
    let c = series.coeffs();
    let n = series.degree();
    match n {
        0 => Ok(Vec::new()),
        1 => Ok(vec![Complex64::new(-c[0] / c[1], 0.0)]),
        _ => {
            let mut h = colleague_hessenberg(c);
            balance(&mut h, n);
            hessenberg_eigenvalues(&mut h, n)
        }
    }
}

/// Diagonal similarity scaling by powers of two (Parlett–Reinsch). Keeps the
/// sparsity pattern, so a Hessenberg matrix stays Hessenberg.
fn balance(a: &mut [f64], n: usize) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j * n + i].abs();
                    r += a[i * n + j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[i * n + j] /= f;
                }
                for j in 0..n {
                    a[j * n + i] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of a real upper Hessenberg matrix by the implicit double-shift
/// QR algorithm (EISPACK `hqr`). `a` is row-major `n × n` and is destroyed.
fn hessenberg_eigenvalues(a: &mut [f64], n: usize) -> Result<Vec<Complex64>, RootError> {
    // One-based accessors keep the loop bounds identical to the classic routine.
    let idx = |i: usize, j: usize| (i - 1) * n + (j - 1);
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[idx(i, j)].abs();
        }
    }

    let mut nn = n;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0;
        loop {
            // Look for a negligible subdiagonal element.
            let mut l = nn;
            while l >= 2 {
                let mut s = a[idx(l - 1, l - 1)].abs() + a[idx(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[idx(l, l - 1)].abs() + s == s {
                    a[idx(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let x = a[idx(nn, nn)];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
            } else {
                let y = a[idx(nn - 1, nn - 1)];
                let w = a[idx(nn, nn - 1)] * a[idx(nn - 1, nn)];
                if l == nn - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let z = q.abs().sqrt();
                    let x = x + t;
                    if q >= 0.0 {
                        let z = p + z.copysign(p);
                        wr[nn - 1] = x + z;
                        wr[nn] = if z != 0.0 { x - w / z } else { x + z };
                        wi[nn - 1] = 0.0;
                        wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn -= 2;
                } else {
                    if its == QR_MAX_SWEEPS {
                        return Err(RootError::NoConvergence {
                            sweeps: its,
                            block: nn,
                        });
                    }
                    let (mut x, mut y, mut w) = (x, y, w);
                    if its == 10 || its == 20 {
                        // Exceptional shift.
                        t += x;
                        for i in 1..=nn {
                            a[idx(i, i)] -= x;
                        }
                        let s = a[idx(nn, nn - 1)].abs() + a[idx(nn - 1, nn - 2)].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    double_shift_sweep(a, n, l, nn, x, y, w);
                }
            }
            if nn < 2 || l + 1 >= nn {
                break;
            }
        }
    }

    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

fn double_shift_sweep(a: &mut [f64], n: usize, l: usize, nn: usize, x: f64, y: f64, w: f64) {
    let idx = |i: usize, j: usize| (i - 1) * n + (j - 1);
    let (mut p, mut q, mut r);
    let mut m = nn - 2;
    loop {
        let z = a[idx(m, m)];
        let rr = x - z;
        let s = y - z;
        p = (rr * s - w) / a[idx(m + 1, m)] + a[idx(m, m + 1)];
        q = a[idx(m + 1, m + 1)] - z - rr - s;
        r = a[idx(m + 2, m + 1)];
        let s = p.abs() + q.abs() + r.abs();
        p /= s;
        q /= s;
        r /= s;
        if m == l {
            break;
        }
        let u = a[idx(m, m - 1)].abs() * (q.abs() + r.abs());
        let v = p.abs() * (a[idx(m - 1, m - 1)].abs() + z.abs() + a[idx(m + 1, m + 1)].abs());
        if u + v == v {
            break;
        }
        m -= 1;
    }
    for i in (m + 2)..=nn {
        a[idx(i, i - 2)] = 0.0;
        if i != m + 2 {
            a[idx(i, i - 3)] = 0.0;
        }
    }
    for k in m..nn {
        let mut xk = 0.0;
        if k != m {
            p = a[idx(k, k - 1)];
            q = a[idx(k + 1, k - 1)];
            r = if k != nn - 1 { a[idx(k + 2, k - 1)] } else { 0.0 };
            xk = p.abs() + q.abs() + r.abs();
            if xk != 0.0 {
                p /= xk;
                q /= xk;
                r /= xk;
            }
        }
        let s = (p * p + q * q + r * r).sqrt().copysign(p);
        if s == 0.0 {
            continue;
        }
        if k == m {
            if l != m {
                a[idx(k, k - 1)] = -a[idx(k, k - 1)];
            }
        } else {
            a[idx(k, k - 1)] = -s * xk;
        }
        p += s;
        let xr = p / s;
        let yr = q / s;
        let zr = r / s;
        q /= p;
        r /= p;
        for j in k..=nn {
            let mut pp = a[idx(k, j)] + q * a[idx(k + 1, j)];
            if k != nn - 1 {
                pp += r * a[idx(k + 2, j)];
                a[idx(k + 2, j)] -= pp * zr;
            }
            a[idx(k + 1, j)] -= pp * yr;
            a[idx(k, j)] -= pp * xr;
        }
        let mmin = nn.min(k + 3);
        for i in l..=mmin {
            let mut pp = xr * a[idx(i, k)] + yr * a[idx(i, k + 1)];
            if k != nn - 1 {
                pp += zr * a[idx(i, k + 2)];
                a[idx(i, k + 2)] -= pp * r;
            }
            a[idx(i, k + 1)] -= pp * q;
            a[idx(i, k)] -= pp;
        }
    }
}

/// A group of coalesced roots: the mean location and the multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootCluster {
    pub center: Complex64,
    pub multiplicity: usize,
    /// Raw eigenvalue locations that were merged into this cluster.
    pub members: Vec<Complex64>,
}

impl RootCluster {
    pub fn is_real(&self) -> bool {
        self.center.im == 0.0
    }

    /// Largest pairwise distance between members.
    pub fn spread(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.members.iter().enumerate() {
            for b in &self.members[i + 1..] {
                d = d.max((a - b).norm());
            }
        }
        d
    }
}

/// Roots of `series` grouped into multiplicity clusters, sorted by real then
/// imaginary part of the center.
pub fn clustered_roots(series: &ChebyshevSeries) -> Result<Vec<RootCluster>, RootError> {
    let raw = colleague_roots(series)?;
    let monomial = series.to_monomial();
    let mut out = Vec::new();
    let all: Vec<usize> = (0..raw.len()).collect();
    split_into_clusters(&raw, &monomial, &all, 0, &mut out);
    for cluster in out.iter_mut() {
        finalize_cluster(cluster, &monomial);
    }
    out.sort_by(|a, b| {
        a.center
            .re
            .total_cmp(&b.center.re)
            .then(a.center.im.total_cmp(&b.center.im))
    });
    Ok(out)
}

/// Whether any two raw roots are closer than [`ILL_CONDITIONED_GAP`].
pub fn has_ill_conditioned_pair(clusters: &[RootCluster]) -> bool {
    let pts: Vec<Complex64> = clusters.iter().flat_map(|c| c.members.clone()).collect();
    pts.iter().enumerate().any(|(i, a)| {
        pts[i + 1..]
            .iter()
            .any(|b| (a - b).norm() < ILL_CONDITIONED_GAP)
    })
}

const LINKAGE_RADII: [f64; 11] = [
    1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-10,
];

fn split_into_clusters(
    raw: &[Complex64],
    monomial: &[f64],
    group: &[usize],
    level: usize,
    out: &mut Vec<RootCluster>,
) {
    if group.len() == 1 || level == LINKAGE_RADII.len() {
        for &i in group {
            out.push(RootCluster {
                center: raw[i],
                multiplicity: 1,
                members: vec![raw[i]],
            });
        }
        return;
    }
    for comp in single_linkage(raw, group, LINKAGE_RADII[level]) {
        if comp.len() == 1 {
            split_into_clusters(raw, monomial, &comp, LINKAGE_RADII.len(), out);
            continue;
        }
        let members: Vec<Complex64> = comp.iter().map(|&i| raw[i]).collect();
        let center = members.iter().sum::<Complex64>() / comp.len() as f64;
        if is_multiple_root(monomial, center, comp.len()) {
            out.push(RootCluster {
                center,
                multiplicity: comp.len(),
                members,
            });
        } else {
            split_into_clusters(raw, monomial, &comp, level + 1, out);
        }
    }
}

fn single_linkage(raw: &[Complex64], group: &[usize], radius: f64) -> Vec<Vec<usize>> {
    let mut label: Vec<usize> = (0..group.len()).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        let mut j = i;
        while label[j] != r {
            let next = label[j];
            label[j] = r;
            j = next;
        }
        r
    }
    for a in 0..group.len() {
        for b in (a + 1)..group.len() {
            let za = raw[group[a]];
            let zb = raw[group[b]];
            if (za - zb).norm() <= radius * za.norm().max(1.0) {
                let ra = find(&mut label, a);
                let rb = find(&mut label, b);
                if ra != rb {
                    label[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut root_to_comp: Vec<Option<usize>> = vec![None; group.len()];
    for a in 0..group.len() {
        let r = find(&mut label, a);
        match root_to_comp[r] {
            Some(c) => comps[c].push(group[a]),
            None => {
                root_to_comp[r] = Some(comps.len());
                comps.push(vec![group[a]]);
            }
        }
    }
    comps
}

fn finalize_cluster(cluster: &mut RootCluster, monomial: &[f64]) {
    let mut c = cluster.center;
    if cluster.multiplicity == 1 {
        c = polish_simple_root(monomial, c);
    }
    let scale = c.norm().max(1.0);
    if c.im.abs() <= 1e-13 * scale {
        c.im = 0.0;
    }
    if c.im == 0.0 {
        for edge in [1.0, -1.0] {
            if (c.re - edge).abs() > EDGE_TOL {
                continue;
            }
            // A polished simple root can sit far from ±1 in relative terms when
            // P' is small there, so test P(±1) itself.
            let on_edge = cluster.multiplicity > 1
                || (c.re - edge).abs() <= SIMPLE_EDGE_TOL
                || is_multiple_root(monomial, Complex64::new(edge, 0.0), 1);
            if on_edge {
                c.re = edge;
            }
        }
    }
    cluster.center = c;
}

/// A few Newton steps, keeping only iterates that reduce `|P|`.
fn polish_simple_root(monomial: &[f64], mut x: Complex64) -> Complex64 {
    let real = x.im == 0.0;
    let (mut px, _) = horner_with_derivative(monomial, x);
    for _ in 0..6 {
        let (p, dp) = horner_with_derivative(monomial, x);
        if dp.norm() == 0.0 {
            break;
        }
        let mut next = x - p / dp;
        if real {
            next.im = 0.0;
        }
        let (pn, _) = horner_with_derivative(monomial, next);
        if pn.norm() < px.norm() {
            x = next;
            px = pn;
        } else {
            break;
        }
    }
    x
}
