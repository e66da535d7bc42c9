//! Trajectory CSV: `t,S,I,N,event` with `event` one of `none`, `pre`, `post`.

use std::io::Write;

use pulsesis_core::Trajectory;

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "S", "I", "N", "event"])?;
    for s in &traj.samples {
        w.write_record([
            s.t.to_string(),
            s.s.to_string(),
            s.i.to_string(),
            s.n().to_string(),
            s.kind.label().to_owned(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut buf = Vec::new();
    write_trajectory_csv(traj, &mut buf).expect("in-memory writes do not fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}
