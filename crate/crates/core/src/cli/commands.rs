use std::hint::black_box;
use std::io::Write;
use std::time::Instant;

use super::{table_format, Bench, Cli, Command};
use crate::algorithms::{dist_gemm, dist_lu_factor, dist_lu_solve, hermitian_eig};
use crate::capi;
use crate::dist::{dist_norm, print, DistMatrix};
use crate::error::{Error, Result};
use crate::grid::{DistScheme, Grid};
use crate::local::{LocalMatrix, NormKind};
use crate::stats::{column_moments, prcomp, PcaOptions};
use crate::table_io::read_table_dist;
use crate::transport::{Communicator, ReduceOp};

const CSV_HEADER: &str = "op,n,ranks,grid,seconds,check";

/// Runs the subcommand on one rank. Only world rank 0 writes to `out`.
pub fn execute(cli: &Cli, world: Communicator, out: &mut dyn Write) -> Result<()> {
    let grid = cli.make_grid(&world)?;
    let mut report = Vec::new();
    match &cli.command {
        Command::Bench { kind } => {
            let row = match kind {
                Bench::Gemm { n, nb } => bench_gemm(cli, &grid, *n, *nb)?,
                Bench::Solve { n, nrhs } => bench_solve(cli, &grid, *n, *nrhs)?,
                Bench::Pca {
                    rows,
                    cols,
                    file,
                    comma,
                    header,
                } => {
                    let a = match file {
                        Some(path) => read_table_dist(path, &grid, table_format(*comma, *header))?,
                        None => {
                            let a = DistMatrix::zeros(&grid, rows.unwrap_or(0), cols.unwrap_or(0));
                            a.fill_uniform(cli.seed);
                            a
                        }
                    };
                    bench_pca(cli, &grid, &a)?
                }
            };
            writeln!(report, "{CSV_HEADER}")?;
            writeln!(report, "{row}")?;
        }
        Command::Eigen(f) => {
            let a = read_table_dist(&f.file, &grid, table_format(f.comma, f.header))?;
            let e = hermitian_eig(&a)?;
            writeln!(report, "values")?;
            print(&row_vector(&grid, &e.values), &mut report)?;
            writeln!(report, "vectors")?;
            print(&e.vectors, &mut report)?;
        }
        Command::Pca {
            file,
            scale,
            no_center,
        } => {
            let a = read_table_dist(&file.file, &grid, table_format(file.comma, file.header))?;
            let opts = PcaOptions {
                center: !no_center,
                scale: *scale,
                ..PcaOptions::default()
            };
            let res = prcomp(&a, opts)?;
            writeln!(report, "sdev")?;
            print(&row_vector(&grid, &res.sdev), &mut report)?;
            writeln!(report, "rotation")?;
            print(&DistMatrix::from_global(&grid, &res.rotation, DistScheme::StarStar), &mut report)?;
            if !res.center.is_empty() {
                writeln!(report, "center")?;
                print(&row_vector(&grid, &res.center), &mut report)?;
            }
        }
        Command::Print(f) => {
            let a = read_table_dist(&f.file, &grid, table_format(f.comma, f.header))?;
            print(&a, &mut report)?;
        }
        Command::Overhead { calls } => overhead(*calls, &mut report)?,
    }
    if world.rank() == 0 {
        out.write_all(&report)?;
        out.flush()?;
    }
    Ok(())
}

fn row_vector(grid: &Grid, values: &[f64]) -> DistMatrix {
    let m = LocalMatrix::from_fn(1, values.len(), |_, j| values[j]);
    DistMatrix::from_global(grid, &m, DistScheme::StarStar)
}

/// Wall time of `f` on each rank, reduced to the slowest rank.
fn timed<T>(grid: &Grid, f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    grid.world().barrier()?;
    let start = Instant::now();
    let out = f()?;
    let local = start.elapsed().as_secs_f64();
    let slowest = grid.world().allreduce_scalar(ReduceOp::Max, local)?;
    Ok((out, slowest))
}

/// Best time over `--repeat` runs of `once`, with the last run's check value.
fn repeated(cli: &Cli, mut once: impl FnMut() -> Result<(f64, f64)>) -> Result<(f64, f64)> {
    let mut best = f64::INFINITY;
    let mut check = f64::NAN;
    for _ in 0..cli.repeat.max(1) {
        let (secs, c) = once()?;
        best = best.min(secs);
        check = c;
    }
    Ok((best, check))
}

fn csv_row(op: &str, n: &str, grid: &Grid, seconds: f64, check: f64) -> String {
    format!(
        "{op},{n},{},{}x{},{seconds:.3},{check:e}",
        grid.size(),
        grid.height(),
        grid.width()
    )
}

fn bench_gemm(cli: &Cli, grid: &Grid, n: usize, nb: usize) -> Result<String> {
    let a = DistMatrix::zeros(grid, n, n);
    let b = DistMatrix::zeros(grid, n, n);
    a.fill_uniform(cli.seed);
    b.fill_uniform(cli.seed.wrapping_add(1));
    let (seconds, check) = repeated(cli, || {
        let c = DistMatrix::zeros(grid, n, n);
        let ((), secs) = timed(grid, || dist_gemm(1.0, &a, &b, 0.0, &c, nb))?;
        Ok((secs, gemm_error(&a, &b, &c)?))
    })?;
    Ok(csv_row("gemm", &n.to_string(), grid, seconds, check))
}

/// Relative Frobenius distance between `C` and a triple-loop product.
/// Evaluated on world rank 0 only; other ranks get NaN.
fn gemm_error(a: &DistMatrix, b: &DistMatrix, c: &DistMatrix) -> Result<f64> {
    let rank = c.grid().world().rank();
    let (a, b, c) = (a.gather()?, b.gather()?, c.gather()?);
    if rank != 0 {
        return Ok(f64::NAN);
    }
    let (m, n, k) = (a.height(), b.width(), a.width());
    let mut diff = 0.0;
    let mut norm = 0.0;
    for j in 0..n {
        for i in 0..m {
            let mut s = 0.0;
            for p in 0..k {
                s += a.at(i, p) * b.at(p, j);
            }
            diff += (c.at(i, j) - s) * (c.at(i, j) - s);
            norm += s * s;
        }
    }
    Ok(if norm == 0.0 { diff.sqrt() } else { (diff / norm).sqrt() })
}

fn bench_solve(cli: &Cli, grid: &Grid, n: usize, nrhs: usize) -> Result<String> {
    let a = DistMatrix::zeros(grid, n, n);
    a.fill_uniform(cli.seed);
    a.update_local(|i, j, bits| {
        let v = f64::from_bits(bits);
        (if i == j { v + n as f64 } else { v }).to_bits()
    });
    let b = DistMatrix::zeros(grid, n, nrhs);
    b.fill_uniform(cli.seed.wrapping_add(1));
    let (seconds, check) = repeated(cli, || {
        let lu = a.deep_copy()?;
        let x = b.deep_copy()?;
        let ((), secs) = timed(grid, || {
            let piv = dist_lu_factor(&lu)?;
            dist_lu_solve(&lu, &piv, &x)
        })?;
        let r = b.deep_copy()?;
        dist_gemm(1.0, &a, &x, -1.0, &r, crate::algorithms::DEFAULT_PANEL)?;
        let res = dist_norm(NormKind::Frobenius, &r)?;
        let scale = dist_norm(NormKind::Frobenius, &a)? * dist_norm(NormKind::Frobenius, &x)?;
        Ok((secs, if scale == 0.0 { res } else { res / scale }))
    })?;
    Ok(csv_row("solve", &n.to_string(), grid, seconds, check))
}

fn bench_pca(cli: &Cli, grid: &Grid, a: &DistMatrix) -> Result<String> {
    let (seconds, check) = repeated(cli, || {
        let (res, secs) = timed(grid, || prcomp(a, PcaOptions::default()))?;
        let total: f64 = column_moments(a)?.std_devs.iter().map(|s| s * s).sum();
        let explained: f64 = res.sdev.iter().map(|s| s * s).sum();
        let resid = (explained - total).abs();
        Ok((secs, if total == 0.0 { resid } else { resid / total }))
    })?;
    let shape = format!("{}x{}", a.height(), a.width());
    Ok(csv_row("pca", &shape, grid, seconds, check))
}

/// Resident set size of this process in MiB, where the platform reports it.
fn resident_mib() -> Option<f64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmRSS:"))?;
    let kib: f64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kib / 1024.0)
}

fn overhead(calls: usize, out: &mut Vec<u8>) -> Result<()> {
    let calls = calls.max(1);
    let mut handle = 0;
    // SAFETY: `handle` is a valid out-pointer.
    let status = unsafe { capi::distla_create_d(100, 100, &mut handle) };
    if status != capi::DISTLA_OK {
        return Err(Error::Config(capi::last_error()));
    }

    let direct = {
        let world = crate::transport::in_process_world(1)?.remove(0);
        let grid = Grid::new(&world, Some(1), Some(1))?;
        let m = DistMatrix::zeros(&grid, 100, 100);
        let start = Instant::now();
        for _ in 0..calls {
            black_box(black_box(&m).width());
        }
        start.elapsed().as_secs_f64()
    };

    let flat = {
        let start = Instant::now();
        for _ in 0..calls {
            let mut w = 0;
            // SAFETY: `w` is a valid out-pointer.
            unsafe { capi::distla_width(black_box(handle), &mut w) };
            black_box(w);
        }
        start.elapsed().as_secs_f64()
    };

    let by_name = {
        let name = c"Width";
        let start = Instant::now();
        for _ in 0..calls {
            // SAFETY: `name` is NUL-terminated; `w` is a valid out-pointer.
            let id = unsafe { capi::distla_lookup(black_box(name.as_ptr())) };
            let mut w = 0;
            if capi::METHODS.get(id as usize) == Some(&"Width") {
                unsafe { capi::distla_width(handle, &mut w) };
            }
            black_box(w);
        }
        start.elapsed().as_secs_f64()
    };
    capi::distla_destroy(handle);

    writeln!(out, "path,calls,mean_seconds")?;
    for (path, total) in [("core", direct), ("flat", flat), ("by_name", by_name)] {
        writeln!(out, "{path},{calls},{:e}", total / calls as f64)?;
    }
    match resident_mib() {
        Some(mib) => writeln!(out, "resident_mib,{mib:.1}")?,
        None => writeln!(out, "resident_mib,unavailable")?,
    }
    writeln!(
        out,
        "reference,0.6 ms per call,30 MB per process (for comparison, not measured here)"
    )?;
    Ok(())
}
