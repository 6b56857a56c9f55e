//! Ranks connected over loopback TCP through a rendezvous server.

use std::time::Duration;

use distla::algorithms::dist_gemm;
use distla::dist::{dist_norm, DistMatrix};
use distla::grid::Grid;
use distla::local::NormKind;
use distla::transport::{connect_world, Rendezvous};

fn main() -> distla::Result<()> {
    let ranks = 4;
    let server = Rendezvous::bind("127.0.0.1:0")?;
    let addr = server.local_addr()?;
    let serving = std::thread::spawn(move || server.serve(ranks, Duration::from_secs(10)));

    let workers: Vec<_> = (0..ranks as u64)
        .map(|key| {
            std::thread::spawn(move || -> distla::Result<String> {
                let world = connect_world(addr, key, Duration::from_secs(10))?;
                let grid = Grid::new(&world, None, None)?;
                let a = DistMatrix::zeros(&grid, 32, 32);
                a.fill_uniform(9);
                let c = DistMatrix::zeros(&grid, 32, 32);
                dist_gemm(1.0, &a, &a, 0.0, &c, 8)?;
                let norm = dist_norm(NormKind::Frobenius, &c)?;
                Ok(format!("rank {} of {} over {:?}: ||A A||_F = {norm}", world.rank(), world.size(), world.backend()))
            })
        })
        .collect();
    for w in workers {
        println!("{}", w.join().expect("worker panicked")?);
    }
    serving.join().expect("rendezvous panicked")
}
