//! File-to-file remosaic runs with timing, for builtins and plugins.
//!
//! Plugins are executables invoked as `<command> <input.rgbw> <output.bayer>`
//! through `sh -c`. They must exit 0 and leave a GBRG MRAW1 file of the
//! input's size. Plugin runtime is the whole subprocess wall-clock; builtin
//! runtime covers the algorithm only, not file I/O.

use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::mraw;
use crate::raw::RawImage;

use super::RemosaicAlgo;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimingProtocol {
    pub warmup: usize,
    pub repeats: usize,
}

impl Default for TimingProtocol {
    fn default() -> Self {
        TimingProtocol {
            warmup: 1,
            repeats: 3,
        }
    }
}

impl TimingProtocol {
    pub const SINGLE: TimingProtocol = TimingProtocol {
        warmup: 0,
        repeats: 1,
    };
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub timeout: Duration,
    pub timing: TimingProtocol,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            timeout: Duration::from_secs(600),
            timing: TimingProtocol::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    /// Median seconds per run (builtins) or subprocess wall-clock (plugins).
    pub runtime_s: f64,
    pub output: RawImage,
    /// Captured plugin stdout and stderr; empty for builtins.
    pub log: String,
}

pub fn run_remosaic(
    algo: &RemosaicAlgo,
    in_path: &Path,
    out_path: &Path,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    algo.validate()?;
    let input = mraw::read(in_path)?;
    input.require_rgbw()?;
    if algo.is_plugin() {
        let command = algo.command.as_deref().unwrap_or_default();
        let (elapsed, log) = run_plugin(command, in_path, out_path, opts.timeout)?;
        let output = mraw::read(out_path)
            .map_err(|e| Error::Plugin(format!("{}: unreadable output: {e}", algo.name)))?;
        check_output(&input, &output).map_err(|e| Error::Plugin(format!("{}: {e}", algo.name)))?;
        return Ok(RunOutcome {
            runtime_s: elapsed.as_secs_f64(),
            output,
            log,
        });
    }

    for _ in 0..opts.timing.warmup {
        algo.apply(&input)?;
    }
    let mut times = Vec::with_capacity(opts.timing.repeats.max(1));
    let mut output = None;
    for _ in 0..opts.timing.repeats.max(1) {
        let start = Instant::now();
        let out = algo.apply(&input)?;
        times.push(start.elapsed().as_secs_f64());
        output = Some(out);
    }
    let output = output.expect("at least one timed run");
    mraw::write(out_path, &output)?;
    Ok(RunOutcome {
        runtime_s: median(&mut times),
        output,
        log: String::new(),
    })
}

pub(crate) fn check_output(input: &RawImage, output: &RawImage) -> Result<()> {
    if !output.same_geometry(input) {
        return Err(Error::Size(format!(
            "output is {}x{}, input is {}x{}",
            output.width(),
            output.height(),
            input.width(),
            input.height()
        )));
    }
    output.require_gbrg()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs `command in out` under `sh`, returning wall-clock time and output.
pub fn run_plugin(command: &str, input: &Path, output: &Path, timeout: Duration) -> Result<(Duration, String)> {
    let start = Instant::now();
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(format!("{command} \"$@\""))
        .arg("sh")
        .arg(input)
        .arg(output)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Plugin(format!("cannot spawn {command:?}: {e}")))?;

    let drain = |mut r: Box<dyn Read + Send>| {
        thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = r.read_to_end(&mut buf);
            String::from_utf8_lossy(&buf).into_owned()
        })
    };
    let out_reader = drain(Box::new(child.stdout.take().expect("piped stdout")));
    let err_reader = drain(Box::new(child.stderr.take().expect("piped stderr")));

    let status = loop {
        if let Some(status) = child
            .try_wait()
            .map_err(|e| Error::Plugin(format!("waiting on {command:?}: {e}")))?
        {
            break Some(status);
        }
        if start.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            break None;
        }
        thread::sleep(Duration::from_millis(2));
    };
    let elapsed = start.elapsed();
    let Some(status) = status else {
        // Grandchildren may still hold the pipes open; leave the readers be.
        return Err(Error::Plugin(format!(
            "{command:?} timed out after {:.1} s",
            timeout.as_secs_f64()
        )));
    };
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();
    let mut log = String::new();
    if !stdout.is_empty() {
        log.push_str(&format!("[stdout]\n{stdout}"));
    }
    if !stderr.is_empty() {
        log.push_str(&format!("[stderr]\n{stderr}"));
    }
    if !status.success() {
        return Err(Error::Plugin(format!(
            "{command:?} exited with {status}; {}",
            log.trim()
        )));
    }
    Ok((elapsed, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfa::CfaPattern;
    use crate::raw::Levels;
    use crate::remosaic::AlgoKind;

    fn input(dir: &Path) -> std::path::PathBuf {
        let data = (0..64).map(|i| (i * 11) as u16).collect();
        let img = RawImage::new(8, 8, Levels::default(), CfaPattern::rgbw_diag(), data).unwrap();
        let p = dir.join("in.rgbw");
        mraw::write(&p, &img).unwrap();
        p
    }

    #[test]
    fn builtin_writes_valid_bayer() {
        let dir = tempfile::tempdir().unwrap();
        let inp = input(dir.path());
        let out = dir.path().join("out.bayer");
        let r = run_remosaic(&RemosaicAlgo::builtin(AlgoKind::Nearest), &inp, &out, &RunOptions::default()).unwrap();
        let back = mraw::read(&out).unwrap();
        assert!(back.pattern().is_bayer_gbrg());
        assert_eq!((back.width(), back.height()), (8, 8));
        assert_eq!(back, r.output);
        assert!(r.runtime_s >= 0.0);
    }

    #[test]
    fn plugin_copying_an_answer_is_what_comes_back() {
        let dir = tempfile::tempdir().unwrap();
        let inp = input(dir.path());
        let answer = RawImage::filled(8, 8, Levels::default(), CfaPattern::bayer_gbrg(), 42).unwrap();
        let answer_path = dir.path().join("answer.bayer");
        mraw::write(&answer_path, &answer).unwrap();
        let cmd = format!("sh -c 'echo hi; cp {} \"$2\"' x", answer_path.display());
        let algo = RemosaicAlgo::plugin("copy", cmd);
        let out = dir.path().join("out.bayer");
        let r = run_remosaic(&algo, &inp, &out, &RunOptions::default()).unwrap();
        assert_eq!(r.output, answer);
        assert!(r.log.contains("hi"));
    }

    #[test]
    fn plugin_failures_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let inp = input(dir.path());
        let out = dir.path().join("out.bayer");
        let opts = RunOptions::default();

        let wrong = RawImage::filled(4, 4, Levels::default(), CfaPattern::bayer_gbrg(), 0).unwrap();
        let wrong_path = dir.path().join("wrong.bayer");
        mraw::write(&wrong_path, &wrong).unwrap();
        let algo = RemosaicAlgo::plugin("wrong", format!("sh -c 'cp {} \"$2\"' x", wrong_path.display()));
        let err = run_remosaic(&algo, &inp, &out, &opts).unwrap_err().to_string();
        assert!(err.contains("4x4") && err.contains("8x8"), "{err}");

        let algo = RemosaicAlgo::plugin("fail", "sh -c 'echo boom >&2; exit 3' x");
        let err = run_remosaic(&algo, &inp, &out, &opts).unwrap_err().to_string();
        assert!(err.contains("boom"), "{err}");

        let _ = std::fs::remove_file(&out);
        let algo = RemosaicAlgo::plugin("silent", "true");
        assert!(run_remosaic(&algo, &inp, &out, &opts).is_err());
    }

    #[test]
    fn plugin_timeout() {
        let dir = tempfile::tempdir().unwrap();
        let inp = input(dir.path());
        let out = dir.path().join("out.bayer");
        let opts = RunOptions {
            timeout: Duration::from_millis(200),
            ..RunOptions::default()
        };
        let algo = RemosaicAlgo::plugin("slow", "sleep 5; true");
        let start = Instant::now();
        let err = run_remosaic(&algo, &inp, &out, &opts).unwrap_err().to_string();
        assert!(err.contains("timed out"), "{err}");
        assert!(start.elapsed() < Duration::from_secs(4));
    }

    #[test]
    fn median_of_runs() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
