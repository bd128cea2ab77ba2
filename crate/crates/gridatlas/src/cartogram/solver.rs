//! Diffusion solver for the density-equalizing deformation.
//!
//! The density is mirrored evenly in both axes (zero-flux boundary) and
//! diffused exactly in Fourier space: rho_hat(k, t) = rho_hat(k, 0)·exp(−|k|²t).
//! Lattice tracers are advected through the velocity field v = −∇ρ/ρ with
//! midpoint (RK2) steps on a geometrically growing time schedule, until the
//! density's relative deviation from its mean drops below `rel_tol`.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::cartogram::{CartogramDiagnostics, DeformationField, DensityGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOpts {
    pub max_steps: usize,
    pub rel_tol: f64,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts {
            max_steps: 2000,
            rel_tol: 0.01,
        }
    }
}

/// 2-D FFT over an M×N complex buffer (row-major, N rows of length M).
struct Fft2 {
    m: usize,
    n: usize,
    row: Arc<dyn Fft<f64>>,
    col: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(planner: &mut FftPlanner<f64>, m: usize, n: usize, inverse: bool) -> Self {
        let dir = if inverse {
            rustfft::FftDirection::Inverse
        } else {
            rustfft::FftDirection::Forward
        };
        Fft2 {
            m,
            n,
            row: planner.plan_fft(m, dir),
            col: planner.plan_fft(n, dir),
        }
    }

    fn process(&self, data: &mut [Complex<f64>]) {
        debug_assert_eq!(data.len(), self.m * self.n);
        for r in 0..self.n {
            self.row.process(&mut data[r * self.m..(r + 1) * self.m]);
        }
        // columns via transpose-process-transpose on a scratch buffer
        let mut col_buf = vec![Complex::default(); self.n];
        for c in 0..self.m {
            for r in 0..self.n {
                col_buf[r] = data[r * self.m + c];
            }
            self.col.process(&mut col_buf);
            for r in 0..self.n {
                data[r * self.m + c] = col_buf[r];
            }
        }
    }
}

/// Even (whole-sample) mirror index for a domain of length n doubled to 2n.
#[inline]
fn mirror(i: usize, n: usize) -> usize {
    if i < n {
        i
    } else {
        2 * n - 1 - i
    }
}

pub fn solve_cartogram(
    density: &DensityGrid,
    opts: &SolveOpts,
) -> Result<(DeformationField, CartogramDiagnostics)> {
    let lat = &density.lattice;
    let (nx, ny) = (lat.nx, lat.ny);
    let (m, n) = (2 * nx, 2 * ny);

    if density.rho.iter().any(|r| !(r > &0.0) || !r.is_finite()) {
        return Err(Error::invalid_params(
            "density must be strictly positive and finite",
        ));
    }

    let mut planner = FftPlanner::new();
    let fwd = Fft2::new(&mut planner, m, n, false);
    let inv = Fft2::new(&mut planner, m, n, true);

    // Forward transform of the mirrored density, once.
    let mut rho_hat = vec![Complex::default(); m * n];
    for j in 0..n {
        let sj = mirror(j, ny);
        for i in 0..m {
            let si = mirror(i, nx);
            rho_hat[j * m + i] = Complex::new(density.rho[lat.idx(si, sj)], 0.0);
        }
    }
    fwd.process(&mut rho_hat);

    // Integer frequencies and squared wavenumbers (lattice units).
    let ksq = |f: usize, len: usize| -> f64 {
        let fi = if f <= len / 2 {
            f as f64
        } else {
            f as f64 - len as f64
        };
        let k = 2.0 * std::f64::consts::PI * fi / len as f64;
        k * k
    };
    let kx2: Vec<f64> = (0..m).map(|f| ksq(f, m)).collect();
    let ky2: Vec<f64> = (0..n).map(|f| ksq(f, n)).collect();

    let mean = density.rho.iter().sum::<f64>() / (nx * ny) as f64;
    let mass0: f64 = density.rho.iter().sum();
    let rho_floor = mean * 1e-12;
    let norm = 1.0 / (m * n) as f64;

    // Diffused density at time t, quadrant [0, nx) x [0, ny).
    let mut spec_buf = vec![Complex::default(); m * n];
    let mut rho_t = vec![0.0f64; nx * ny];
    let mut snapshot = |t: f64, rho_out: &mut Vec<f64>| {
        for j in 0..n {
            for i in 0..m {
                let decay = (-(kx2[i] + ky2[j]) * t).exp();
                spec_buf[j * m + i] = rho_hat[j * m + i] * decay;
            }
        }
        inv.process(&mut spec_buf);
        for j in 0..ny {
            for i in 0..nx {
                rho_out[j * nx + i] = spec_buf[j * m + i].re * norm;
            }
        }
    };

    // Velocity field v = -∇ρ/ρ, central differences with even reflection.
    let velocity = |rho: &[f64], vx: &mut [f64], vy: &mut [f64]| {
        for j in 0..ny {
            for i in 0..nx {
                let ip = if i + 1 < nx { i + 1 } else { i };
                let im = i.saturating_sub(1);
                let jp = if j + 1 < ny { j + 1 } else { j };
                let jm = j.saturating_sub(1);
                let gx = (rho[j * nx + ip] - rho[j * nx + im]) / 2.0;
                let gy = (rho[jp * nx + i] - rho[jm * nx + i]) / 2.0;
                let r = rho[j * nx + i].max(rho_floor);
                vx[j * nx + i] = -gx / r;
                vy[j * nx + i] = -gy / r;
            }
        }
    };

    let bilinear = |field: &[f64], x: f64, y: f64| -> f64 {
        let fx = x.clamp(0.0, (nx - 1) as f64);
        let fy = y.clamp(0.0, (ny - 1) as f64);
        let i0 = (fx.floor() as usize).min(nx - 2);
        let j0 = (fy.floor() as usize).min(ny - 2);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        field[j0 * nx + i0] * (1.0 - tx) * (1.0 - ty)
            + field[j0 * nx + i0 + 1] * tx * (1.0 - ty)
            + field[(j0 + 1) * nx + i0] * (1.0 - tx) * ty
            + field[(j0 + 1) * nx + i0 + 1] * tx * ty
    };

    // Tracer positions, one per lattice node.
    let mut px: Vec<f64> = (0..nx * ny).map(|k| (k % nx) as f64).collect();
    let mut py: Vec<f64> = (0..nx * ny).map(|k| (k / nx) as f64).collect();

    let mut vx = vec![0.0f64; nx * ny];
    let mut vy = vec![0.0f64; nx * ny];
    let mut t = 0.0f64;
    let mut dt = 0.5f64;
    let mut steps = 0usize;
    let mut converged = false;
    let mut deviation_history = Vec::new();
    let mut max_mass_rel_err = 0.0f64;
    let mut final_deviation = f64::INFINITY;
    const MAX_STEP_DISP: f64 = 0.9;

    while steps < opts.max_steps {
        // Field at the midpoint time of the candidate step.
        snapshot(t + dt / 2.0, &mut rho_t);

        let mass: f64 = rho_t.iter().sum();
        max_mass_rel_err = max_mass_rel_err.max((mass - mass0).abs() / mass0);
        let dev = rho_t
            .iter()
            .map(|r| (r - mean).abs())
            .fold(0.0, f64::max)
            / mean;

        velocity(&rho_t, &mut vx, &mut vy);

        // Midpoint displacement, with the step capped by the largest move.
        let mut max_disp = 0.0f64;
        let disp: Vec<(f64, f64)> = px
            .iter()
            .zip(&py)
            .map(|(&x, &y)| {
                let k1x = bilinear(&vx, x, y);
                let k1y = bilinear(&vy, x, y);
                let mx = x + k1x * dt / 2.0;
                let my = y + k1y * dt / 2.0;
                let k2x = bilinear(&vx, mx, my);
                let k2y = bilinear(&vy, mx, my);
                (k2x * dt, k2y * dt)
            })
            .collect();
        for &(dx, dy) in &disp {
            max_disp = max_disp.max(dx.abs().max(dy.abs()));
        }
        if !max_disp.is_finite() {
            return Err(Error::Numerical {
                step: steps,
                detail: "non-finite displacement in cartogram advection".into(),
            });
        }
        if max_disp > MAX_STEP_DISP {
            dt /= 2.0;
            continue;
        }

        // Accept the step. Boundary tracers stay pinned.
        for j in 0..ny {
            for i in 0..nx {
                if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                    continue;
                }
                let k = j * nx + i;
                px[k] = (px[k] + disp[k].0).clamp(0.0, (nx - 1) as f64);
                py[k] = (py[k] + disp[k].1).clamp(0.0, (ny - 1) as f64);
            }
        }
        t += dt;
        dt *= 1.25;
        steps += 1;
        deviation_history.push(dev);
        final_deviation = dev;

        if dev < opts.rel_tol {
            converged = true;
            break;
        }
    }

    let dx: Vec<f64> = px
        .iter()
        .enumerate()
        .map(|(k, &x)| (x - (k % nx) as f64) * lat.step)
        .collect();
    let dy: Vec<f64> = py
        .iter()
        .enumerate()
        .map(|(k, &y)| (y - (k / nx) as f64) * lat.step)
        .collect();
    if dx.iter().chain(&dy).any(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            step: steps,
            detail: "non-finite cumulative displacement".into(),
        });
    }

    Ok((
        DeformationField {
            lattice: lat.clone(),
            dx,
            dy,
        },
        CartogramDiagnostics {
            zones: Vec::new(),
            max_rel_error: 0.0,
            iterations: steps,
            converged,
            final_deviation,
            deviation_history,
            max_mass_rel_err,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartogram::Lattice;

    fn lattice(nx: usize, ny: usize) -> Lattice {
        let step = 360.0 / (nx - 8) as f64;
        Lattice {
            nx,
            ny,
            pad: 4,
            x0: -180.0 - 4.0 * step + step / 2.0,
            y0: -90.0 - 4.0 * step + step / 2.0,
            step,
        }
    }

    fn density(nx: usize, ny: usize, rho: Vec<f64>) -> DensityGrid {
        let mean = rho.iter().sum::<f64>() / rho.len() as f64;
        DensityGrid {
            lattice: lattice(nx, ny),
            rho,
            rho_sea: mean,
        }
    }

    #[test]
    fn constant_density_gives_zero_displacement() {
        let d = density(40, 24, vec![3.5; 40 * 24]);
        let (field, diag) = solve_cartogram(&d, &SolveOpts::default()).unwrap();
        assert!(diag.converged);
        assert_eq!(diag.iterations, 1);
        let max = field
            .dx
            .iter()
            .chain(&field.dy)
            .fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!(max < 1e-9, "max displacement {max}");
    }

    #[test]
    fn mass_conserved_and_deviation_monotone() {
        let (nx, ny) = (48, 32);
        let mut rho = vec![1.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                if j >= ny / 2 {
                    rho[j * nx + i] = 3.0;
                }
            }
        }
        let d = density(nx, ny, rho);
        let (_, diag) = solve_cartogram(&d, &SolveOpts::default()).unwrap();
        assert!(diag.converged);
        assert!(diag.max_mass_rel_err <= 1e-6, "{}", diag.max_mass_rel_err);
        for w in diag.deviation_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "deviation increased: {w:?}");
        }
    }

    #[test]
    fn point_symmetric_density_gives_point_symmetric_field() {
        let (nx, ny) = (36, 28);
        let mut rho = vec![1.0; nx * ny];
        // Two symmetric bumps about the lattice center.
        let bump = |rho: &mut Vec<f64>, ci: f64, cj: f64, a: f64| {
            for j in 0..ny {
                for i in 0..nx {
                    let dx = i as f64 - ci;
                    let dy = j as f64 - cj;
                    rho[j * nx + i] += a * (-(dx * dx + dy * dy) / 8.0).exp();
                }
            }
        };
        bump(&mut rho, 10.0, 9.0, 5.0);
        bump(&mut rho, (nx - 1) as f64 - 10.0, (ny - 1) as f64 - 9.0, 5.0);
        let d = density(nx, ny, rho);
        let (field, _) = solve_cartogram(&d, &SolveOpts::default()).unwrap();
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let k2 = (ny - 1 - j) * nx + (nx - 1 - i);
                assert!(
                    (field.dx[k] + field.dx[k2]).abs() < 1e-6,
                    "dx asymmetry at ({i},{j})"
                );
                assert!((field.dy[k] + field.dy[k2]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn boundary_nodes_do_not_move() {
        let (nx, ny) = (40, 24);
        let mut rho = vec![1.0; nx * ny];
        rho[12 * nx + 20] = 40.0;
        let d = density(nx, ny, rho);
        let (field, _) = solve_cartogram(&d, &SolveOpts::default()).unwrap();
        for i in 0..nx {
            assert_eq!(field.dx[i], 0.0);
            assert_eq!(field.dy[(ny - 1) * nx + i], 0.0);
        }
        for j in 0..ny {
            assert_eq!(field.dx[j * nx], 0.0);
            assert_eq!(field.dy[j * nx + nx - 1], 0.0);
        }
    }
}
