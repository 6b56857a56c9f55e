//! Four ranks as threads exchanging messages and running collectives.

use distla::transport::{run_in_process, ReduceOp};

fn main() -> distla::Result<()> {
    let reports = run_in_process(4, |world| -> distla::Result<String> {
        let me = world.rank();
        let next = (me + 1) % world.size();
        let prev = (me + world.size() - 1) % world.size();
        world.send(next, 1, vec![me as u8])?;
        let from_prev = world.recv(prev, 1)?;

        let sum = world.allreduce_scalar(ReduceOp::Sum, me as f64)?;
        let gathered = world.allgatherv(&vec![me as f64; me + 1])?;
        let evens = world.split((me % 2) as i64, me as i64)?;
        Ok(format!(
            "rank {me}: got {:?} from {prev}, sum {sum}, gathered {} values, rank {} of {} in its half",
            from_prev,
            gathered.len(),
            evens.rank(),
            evens.size()
        ))
    })?;
    for r in reports {
        println!("{}", r?);
    }
    Ok(())
}
