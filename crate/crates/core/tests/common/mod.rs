//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::Arc;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Coord = [f64; 3];

/// Cyclic Jacobi eigenvalue iteration on a dense symmetric matrix.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut values: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Dense ANM Hessian built straight from the spring-network definition.
pub fn naive_hessian(coords: &[Coord], cutoff: f64, gamma: f64) -> Vec<Vec<f64>> {
    let n = coords.len();
    let mut h = vec![vec![0.0; 3 * n]; 3 * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d: Vec<f64> = (0..3).map(|a| coords[j][a] - coords[i][a]).collect();
            let r2: f64 = d.iter().map(|x| x * x).sum();
            if r2 >= cutoff * cutoff {
                continue;
            }
            for a in 0..3 {
                for b in 0..3 {
                    let k = -gamma * d[a] * d[b] / r2;
                    h[3 * i + a][3 * j + b] = k;
                    h[3 * i + a][3 * i + b] -= k;
                }
            }
        }
    }
    h
}

/// Oracle frequencies: skip six rigid modes, sqrt, divide by the largest.
pub fn oracle_frequencies(coords: &[Coord], cutoff: f64, k: usize) -> (Vec<f64>, usize) {
    let values = jacobi_eigenvalues(naive_hessian(coords, cutoff, 1.0));
    let zeros = values.iter().filter(|v| **v < 1e-8).count();
    let f: Vec<f64> = values[6..6 + k].iter().map(|v| v.sqrt()).collect();
    let max = f[k - 1];
    (f.into_iter().map(|x| x / max).collect(), zeros)
}

/// A random compact chain: 3.8 Å steps with a bounded turn so every bead
/// has a neighbor inside 15 Å.
pub fn random_chain(n: usize, seed: u64) -> Vec<Coord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = vec![[0.0, 0.0, 0.0]];
    while coords.len() < n {
        let last = *coords.last().unwrap();
        let z: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).sqrt();
        let next = [
            last[0] + 3.8 * r * phi.cos(),
            last[1] + 3.8 * r * phi.sin(),
            last[2] + 3.8 * z,
        ];
        let clear = coords[..coords.len() - 1].iter().all(|c| {
            let d: f64 = (0..3).map(|a| (c[a] - next[a]).powi(2)).sum::<f64>().sqrt();
            d > 4.0
        });
        if clear {
            coords.push(next);
        }
    }
    coords
}

/// Minimal HTTP/1.1 server answering each POST with the handler's body.
/// The handler gets the request body and returns `(delay_ms, body)`.
pub struct StubServer {
    pub url: String,
}

pub fn chat_response(content: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": content}}]
    })
    .to_string()
}

pub fn spawn_stub<F>(handler: F) -> StubServer
where
    F: Fn(&str) -> (u64, String) + Send + Sync + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let handler = Arc::new(handler);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let handler = Arc::clone(&handler);
            thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        return;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap_or(0);
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut body = vec![0u8; len];
                if reader.read_exact(&mut body).is_err() {
                    return;
                }
                let (delay, reply) = handler(&String::from_utf8_lossy(&body));
                thread::sleep(std::time::Duration::from_millis(delay));
                let _ = write!(
                    stream,
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    reply.len(),
                    reply
                );
            });
        }
    });
    StubServer { url }
}
