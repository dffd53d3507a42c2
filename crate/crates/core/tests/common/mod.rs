#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use dpsynth::corpus::{to_agnews_csv, Corpus};
use dpsynth::experiment::{ExperimentConfig, ModelKind};
use dpsynth::synth::mock::fixture_corpus;
use dpsynth::synth::{CompletionRequest, MockBackend, TextBackend};

/// Writes `corpus` as AGNews CSV under `dir`.
pub fn write_dataset(dir: &Path, corpus: &Corpus) -> PathBuf {
    let path = dir.join("dataset.csv");
    std::fs::write(&path, to_agnews_csv(corpus)).unwrap();
    path
}

/// Small offline config: 800/400 split of a 1200-record fixture, 400
/// synthetic records, one Laplace release.
pub fn small_config(dir: &Path) -> ExperimentConfig {
    let dataset = write_dataset(dir, &fixture_corpus(300, 1));
    let mut cfg = ExperimentConfig {
        dataset_path: Some(dataset),
        n_train: 800,
        n_test: 400,
        models: vec![ModelKind::Mnb],
        output_dir: dir.join("out"),
        ..ExperimentConfig::default()
    };
    cfg.privacy.retain(|p| p.epsilon == 1.0);
    cfg
}

/// Minimal chat-completions server. Answers with the mock backend's output
/// for the posted prompt, after first replaying `failures` as error statuses.
pub struct FakeServer {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
    pub bodies: Arc<Mutex<Vec<serde_json::Value>>>,
}

impl FakeServer {
    pub fn start(failures: Vec<u16>) -> FakeServer {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!(
            "http://{}/v1/chat/completions",
            listener.local_addr().unwrap()
        );
        let hits = Arc::new(AtomicUsize::new(0));
        let bodies = Arc::new(Mutex::new(Vec::new()));
        let failures = Arc::new(Mutex::new(failures));
        let (h, b) = (hits.clone(), bodies.clone());
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let n = h.fetch_add(1, Ordering::SeqCst);
                let (h2, b2, f2) = (n, b.clone(), failures.clone());
                std::thread::spawn(move || {
                    let mut reader = BufReader::new(stream.try_clone().unwrap());
                    let mut len = 0usize;
                    loop {
                        let mut line = String::new();
                        if reader.read_line(&mut line).unwrap_or(0) == 0 {
                            return;
                        }
                        if line == "\r\n" {
                            break;
                        }
                        let lower = line.to_ascii_lowercase();
                        if let Some(v) = lower.strip_prefix("content-length:") {
                            len = v.trim().parse().unwrap();
                        }
                    }
                    let mut body = vec![0u8; len];
                    reader.read_exact(&mut body).unwrap();
                    let json: serde_json::Value = serde_json::from_slice(&body).unwrap();
                    b2.lock().unwrap().push(json.clone());
                    let failure = {
                        let mut f = f2.lock().unwrap();
                        (!f.is_empty()).then(|| f.remove(0))
                    };
                    let (status, payload) = match failure {
                        Some(code) => (code, r#"{"error":"try later"}"#.to_string()),
                        None => {
                            let prompt = json["messages"][0]["content"].as_str().unwrap();
                            let content = MockBackend::new()
                                .complete(&CompletionRequest {
                                    prompt: prompt.to_string(),
                                    temperature: 0.7,
                                    top_p: 1.0,
                                    max_tokens: 200,
                                    seed: h2 as u64,
                                    nonce: 0,
                                })
                                .unwrap();
                            let reply = serde_json::json!({
                                "choices": [{"message": {"role": "assistant", "content": content}}]
                            });
                            (200, reply.to_string())
                        }
                    };
                    let _ = write!(
                        stream,
                        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                        payload.len()
                    );
                });
            }
        });
        FakeServer { url, hits, bodies }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

fn rec(
    title: &str,
    description: &str,
    label: dpsynth::corpus::ClassLabel,
) -> dpsynth::corpus::NewsRecord {
    dpsynth::corpus::NewsRecord::new(title, description, label, dpsynth::corpus::Origin::Original)
        .unwrap()
}

/// The four demonstrations shown in the published generation prompt.
pub fn published_generation_demos() -> Vec<dpsynth::corpus::NewsRecord> {
    use dpsynth::corpus::ClassLabel::*;
    vec![
        rec(
            "Wall St. Bears Claw Back Into the Black (Reuters)",
            "Reuters - Short-sellers, Wall Street's dwindling\\band of ultra-cynics, are seeing green again.",
            SciTech,
        ),
        rec(
            "Singh Leads, but Leonard Is Following",
            "Avoiding the late trouble that knocked other contenders off track, Vijay Singh held a one-stroke lead over Justin Leonard heading into the final round of the P.G.A. Championship.",
            Sports,
        ),
        rec(
            "Two visions of Iraq struggle to take hold",
            "Fighting in Najaf threatened to undermine a conference to choose a national assembly.",
            World,
        ),
        rec(
            "Dollar Falls to Fresh Low Vs Euro (Reuters)",
            "Reuters - The dollar fell to a fresh four-week low\\versus the euro on Monday after a widening of the U.S. trade\\gap to record levels raised worries about capital inflows in\\the United States and a possible slowdown in the economy.",
            Business,
        ),
    ]
}

/// The four demonstrations shown in the published ICL prompt.
pub fn published_icl_demos() -> Vec<dpsynth::corpus::NewsRecord> {
    use dpsynth::corpus::ClassLabel::*;
    vec![
        rec(
            "Breakthrough in Renewable Energy Technology",
            "Innovative new technology in renewable energy could lead to more efficient solar panels and wind turbines.",
            SciTech,
        ),
        rec(
            "College Basketball Tournament Kicks Off",
            "The much-anticipated college basketball tournament has begun, with teams vying for the championship title.",
            Sports,
        ),
        rec(
            "Cultural Heritage Sites Under Threat",
            "Several cultural heritage sites around the world are facing threats due to climate change and urban development.",
            World,
        ),
        rec(
            "Tech Stocks Rally After Positive Earnings",
            "Tech stocks saw a significant rally today following a series of positive earnings reports from major companies.",
            Business,
        ),
    ]
}

pub fn golden_query() -> dpsynth::corpus::NewsRecord {
    rec(
        "Stock markets rally after positive economic indicators",
        "Stock markets rally after positive economic indicators.",
        dpsynth::corpus::ClassLabel::Business,
    )
}

pub fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    std::fs::read_to_string(path).unwrap()
}

/// Golden file name and rendered prompt for each shot setting and the generation prompt.
pub fn rendered_prompts() -> Vec<(&'static str, String)> {
    use dpsynth::eval::{build_icl_prompt, IclConfig};
    let icl = |shots: usize| {
        let cfg = IclConfig {
            shots,
            ..IclConfig::default()
        };
        build_icl_prompt(&cfg, &published_icl_demos()[..shots], &golden_query()).unwrap()
    };
    vec![
        (
            "generation_4demo_n10.txt",
            dpsynth::synth::build_generation_prompt(&published_generation_demos(), 10).unwrap(),
        ),
        ("icl_0shot.txt", icl(0)),
        ("icl_2shot.txt", icl(2)),
        ("icl_4shot.txt", icl(4)),
    ]
}
