//! End-to-end checks of the `tcpaware` binary.

use std::path::Path;
use std::process::{Command, Output};

fn tcpaware(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcpaware"))
        .args(args)
        .env_remove("TCPAWARE_CONFIG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SMALL: [&str; 4] = ["--runs", "2", "--frames", "1200"];

#[test]
fn amc_table_dump() {
    let o = tcpaware(&["dump-amc-table"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "scheme,rate_mbps,spectral_eff_bps_hz,snr_th_db_ber_1e-5,snr_th_db_ber_1e-6\n\
         QPSK,40,1.60,11.27,12.18\n\
         16-QAM,80,3.20,17.33,18.24\n\
         64-QAM,120,4.80,23.40,24.15\n"
    );
}

#[test]
fn exit_codes() {
    assert_eq!(tcpaware(&["--help"]).status.code(), Some(0));
    assert_eq!(tcpaware(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(
        tcpaware(&["run", "--scheduler", "fifo"]).status.code(),
        Some(1)
    );
    assert_eq!(tcpaware(&["run", "--frames", "10"]).status.code(), Some(1));
    assert_eq!(
        tcpaware(&["run", "--config", "/no/such/file.conf"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        tcpaware(&["sweep-sigma", "--preset", "fig-3"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        tcpaware(&["sweep-cwnd", "--values", "0"]).status.code(),
        Some(1)
    );
    assert_eq!(
        tcpaware(&["validate-analysis", "--scheduler", "twus-a,rr-a"])
            .status
            .code(),
        Some(1)
    );
    let mut args = vec!["run", "-o", "/no/such/dir/out.csv"];
    args.extend(SMALL);
    assert_eq!(tcpaware(&args).status.code(), Some(2));
}

#[test]
fn run_writes_one_row_per_scheduler() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let mut args = vec!["run", "--scheduler", "twus-a", "-o", out.to_str().unwrap()];
    args.extend(SMALL);
    let o = tcpaware(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("scheduler,sigma_db,cwnd_max,runs,frames,avg_cwnd,avg_cwnd_std,"));
    assert!(lines[1].starts_with("twus-a,8,70,2,1000,"));
    // summary goes to stdout when the CSV goes to a file
    assert!(stdout(&o).contains("twus-a sigma=8 dB"));
}

#[test]
fn sigma_sweep_rows() {
    let mut args = vec!["sweep-sigma", "--scheduler", "rr-a,twus-a,dtwus-a"];
    args.extend(SMALL);
    let o = tcpaware(&args);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 15);
    assert!(rows[0].starts_with("rr-a,4,"));
    assert!(rows[14].starts_with("dtwus-a,12,"));
}

#[test]
fn cwnd_sweep_and_analysis() {
    let mut args = vec!["sweep-cwnd", "--values", "10,40", "--scheduler", "twus-a"];
    args.extend(SMALL);
    let o = tcpaware(&args);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(2).unwrap().starts_with("twus-a,8,40,"));

    let mut args = vec!["validate-analysis", "--values", "30,60"];
    args.extend(SMALL);
    let o = tcpaware(&args);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "cwnd_max,sim_bps,model_bps,rel_err");
    assert!(lines[1].starts_with("30,") && lines[2].starts_with("60,"));
}

#[test]
fn traces_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let (snr, tcp, alloc) = (p("snr.csv"), p("tcp.csv"), p("alloc.csv"));
    let mut args = vec![
        "run",
        "--trace-snr",
        &snr,
        "--trace-tcp",
        &tcp,
        "--trace-alloc",
        &alloc,
    ];
    args.extend(SMALL);
    assert!(tcpaware(&args).status.success());
    let head = |path: &str| {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(head(&snr), "run,frame,ss,snr_db");
    assert_eq!(head(&tcp), "run,time_s,ss,event,cwnd,ssthresh,rto");
    assert_eq!(
        head(&alloc),
        "run,frame,ss,rate_bps,slots,demand_bits,dc,weight,deadline_s"
    );
    // one SNR row per station per frame of the single traced run
    assert_eq!(
        std::fs::read_to_string(&snr).unwrap().lines().count(),
        1 + 10 * 1200
    );
}

fn write_config(dir: &Path) -> String {
    let c = tcpaware_sim::config::ExperimentConfig {
        num_runs: 2,
        num_frames: 1200,
        shadowing_sigma_db: 6.0,
        ..tcpaware_sim::config::ExperimentConfig::default()
    };
    let path = dir.join("exp.conf");
    std::fs::write(&path, c.to_config_string()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn config_from_env_and_flag_agree() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path());
    let by_flag = tcpaware(&["run", "--config", &conf]);
    let by_env = Command::new(env!("CARGO_BIN_EXE_tcpaware"))
        .arg("run")
        .env("TCPAWARE_CONFIG", &conf)
        .output()
        .unwrap();
    assert!(by_flag.status.success() && by_env.status.success());
    assert_eq!(by_flag.stdout, by_env.stdout);
    assert!(stdout(&by_flag)
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("twus-a,6,70,2,1000,"));
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(dir.path());
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = tcpaware(&[
            "sweep-sigma",
            "--config",
            &conf,
            "--values",
            "4,8",
            "--scheduler",
            "rr-a,dtwus-a",
            "--seed",
            "7",
            "-o",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}
