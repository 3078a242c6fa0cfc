use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use epr_sim::montecarlo::simulate_trial;
use epr_sim::referee::{
    referee_session, Direction, Endpoints, FaultKind, Kind, LocalStations, Message, Misbehavior,
    Role, SessionConfig, TranscriptEntry,
};
use epr_sim::rng::trial_seed;
use epr_sim::{AngleSetting, Bit, HvModel, ModelSpec, PairRecord, Tally};

#[derive(Clone, Default)]
struct SharedBuf(Arc<Mutex<Vec<u8>>>);

impl Write for SharedBuf {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

impl SharedBuf {
    fn entries(&self) -> Vec<TranscriptEntry> {
        let bytes = self.0.lock().unwrap().clone();
        String::from_utf8(bytes)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    }
}

fn session(
    model: HvModel,
    station_seed: u64,
    master: u64,
    n: u64,
    runs: u64,
) -> (Vec<Tally>, Vec<TranscriptEntry>) {
    let stations = LocalStations::spawn(model, station_seed).unwrap();
    let cfg = SessionConfig::new(n, runs, master, stations.endpoints.clone());
    let buf = SharedBuf::default();
    let score = referee_session(&cfg, Some(Box::new(buf.clone()))).unwrap();
    for r in stations.join() {
        r.unwrap();
    }
    (
        score.results.iter().map(|r| r.tally).collect(),
        buf.entries(),
    )
}

/// (run, pair) → record, rebuilt from ANGLE and OUTCOME lines.
fn records_from_transcript(entries: &[TranscriptEntry], runs: u64, n: u64) -> Vec<Vec<PairRecord>> {
    let mut codes = vec![vec![(None, None, None, None); n as usize]; runs as usize];
    for e in entries {
        let (Some(run), Some(pair)) = (e.msg.run, e.msg.pair_id) else {
            continue;
        };
        let cell = &mut codes[run as usize][pair as usize];
        match (e.dir, e.msg.kind, e.peer) {
            (Direction::Sent, Kind::Angle, Role::Alice) => cell.0 = e.msg.code,
            (Direction::Sent, Kind::Angle, Role::Bob) => cell.1 = e.msg.code,
            (Direction::Received, Kind::Outcome, Role::Alice) => cell.2 = e.msg.bit,
            (Direction::Received, Kind::Outcome, Role::Bob) => cell.3 = e.msg.bit,
            _ => {}
        }
    }
    codes
        .into_iter()
        .map(|run| {
            run.into_iter()
                .enumerate()
                .map(|(p, (a, b, x, y))| PairRecord {
                    pair_id: p as u64,
                    setting: AngleSetting::from_codes(a.unwrap().into(), b.unwrap().into())
                        .unwrap(),
                    alice: Bit::try_from(x.unwrap()).unwrap(),
                    bob: Bit::try_from(y.unwrap()).unwrap(),
                })
                .collect()
        })
        .collect()
}

#[test]
fn adapters_reproduce_in_process_runs_exactly() {
    let (n, runs, seed) = (120, 4, 99);
    for model in HvModel::ALL {
        let (tallies, transcript) = session(model, seed, seed, n, runs);
        let remote = records_from_transcript(&transcript, runs, n);
        for run in 0..runs {
            let local = simulate_trial(&model.spec(), n, trial_seed(seed, n, run)).unwrap();
            assert_eq!(remote[run as usize], local, "{model:?} run {run}");
            let t: Tally = local.iter().collect();
            assert_eq!(tallies[run as usize], t);
        }
    }
}

#[test]
fn angles_follow_acknowledged_hidden_variables() {
    let (_, transcript) = session(HvModel::Cheating, 1, 2, 50, 2);
    let mut last_t = 0;
    for e in &transcript {
        assert!(e.t_us >= last_t);
        last_t = e.t_us;
    }
    for run in 0..2u64 {
        for pair in 0..50u64 {
            for role in [Role::Alice, Role::Bob] {
                let at = |dir, kind| {
                    transcript
                        .iter()
                        .find(|e| {
                            e.dir == dir
                                && e.msg.kind == kind
                                && e.peer == role
                                && e.msg.run == Some(run)
                                && e.msg.pair_id == Some(pair)
                        })
                        .map(|e| e.t_us)
                        .unwrap()
                };
                let ack = at(Direction::Received, Kind::HvAck);
                let angle = at(Direction::Sent, Kind::Angle);
                assert!(ack < angle, "run {run} pair {pair} {role}");
            }
        }
    }
    // every message goes between the referee and exactly one station
    assert!(transcript.iter().all(|e| Role::ALL.contains(&e.peer)));
}

#[test]
fn angle_draws_do_not_depend_on_payloads() {
    let angles = |station_seed| {
        let (_, t) = session(HvModel::BellRandom, station_seed, 5, 64, 2);
        t.into_iter()
            .filter(|e| e.msg.kind == Kind::Angle)
            .map(|e| (e.peer, e.msg.run, e.msg.pair_id, e.msg.code))
            .collect::<Vec<_>>()
    };
    let payloads = |station_seed| {
        let (_, t) = session(HvModel::BellRandom, station_seed, 5, 64, 2);
        t.into_iter()
            .filter(|e| e.msg.kind == Kind::Hv && e.dir == Direction::Received)
            .map(|e| e.msg.payload)
            .collect::<Vec<_>>()
    };
    assert_ne!(payloads(10), payloads(11));
    assert_eq!(angles(10), angles(11));
}

#[test]
fn outcome_before_angle_is_rejected() {
    for (bad_role, behavior) in [
        (Role::Alice, Misbehavior::OutcomeInsteadOfAck),
        (Role::Bob, Misbehavior::OutcomeInsteadOfAck),
        (Role::Alice, Misbehavior::OutcomeAfterAck),
        (Role::Bob, Misbehavior::OutcomeAfterAck),
    ] {
        let stations = LocalStations::spawn_with(HvModel::BellRandom, 1, |r| {
            if r == bad_role {
                behavior
            } else {
                Misbehavior::None
            }
        })
        .unwrap();
        let cfg = SessionConfig::new(10, 1, 1, stations.endpoints.clone());
        let fault = referee_session(&cfg, None).unwrap_err();
        assert_eq!(fault.kind, FaultKind::OutOfOrder, "{fault}");
        assert_eq!(fault.station, Some(bad_role));
        assert!(
            fault.detail.contains("OUTCOME before ANGLE"),
            "{}",
            fault.detail
        );
        assert_eq!((fault.run, fault.pair_id), (Some(0), Some(0)));
        assert!(!fault.transcript.is_empty());
        stations.join();
    }
}

/// A station that answers the handshake and then runs `after` on the
/// remaining conversation.
fn fake_station(
    role: Role,
    after: impl FnOnce(&mut BufReader<std::net::TcpStream>, &mut std::net::TcpStream) + Send + 'static,
) -> (String, thread::JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let handle = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut writer = stream.try_clone().unwrap();
        let mut reader = BufReader::new(stream);
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        writer
            .write_all(Message::hello(role).to_line().as_bytes())
            .unwrap();
        after(&mut reader, &mut writer);
    });
    (addr, handle)
}

fn drain(reader: &mut BufReader<std::net::TcpStream>) {
    let mut line = String::new();
    while reader.read_line(&mut line).map(|n| n > 0).unwrap_or(false) {
        line.clear();
    }
}

#[test]
fn silent_station_times_out() {
    let (source, s) = fake_station(Role::Source, |r, _| drain(r));
    let (alice, a) = fake_station(Role::Alice, |r, _| drain(r));
    let (bob, b) = fake_station(Role::Bob, |r, _| drain(r));
    let mut cfg = SessionConfig::new(5, 1, 0, Endpoints { source, alice, bob });
    cfg.timeout = Duration::from_millis(200);
    let fault = referee_session(&cfg, None).unwrap_err();
    assert_eq!(fault.kind, FaultKind::Timeout);
    assert_eq!(fault.station, Some(Role::Source));
    for h in [s, a, b] {
        h.join().unwrap();
    }
}

#[test]
fn undecodable_payload_is_malformed() {
    let (source, s) = fake_station(Role::Source, |r, w| {
        let mut line = String::new();
        r.read_line(&mut line).unwrap();
        let bad = r#"{"kind":"HV","run":0,"pair_id":0,"to":"alice","payload":"not base64!"}"#;
        w.write_all(format!("{bad}\n").as_bytes()).unwrap();
        drain(r);
    });
    let (alice, a) = fake_station(Role::Alice, |r, _| drain(r));
    let (bob, b) = fake_station(Role::Bob, |r, _| drain(r));
    let cfg = SessionConfig::new(5, 1, 0, Endpoints { source, alice, bob });
    let fault = referee_session(&cfg, None).unwrap_err();
    assert_eq!(fault.kind, FaultKind::Malformed);
    assert_eq!(fault.station, Some(Role::Source));
    for h in [s, a, b] {
        h.join().unwrap();
    }
}

#[test]
fn wrong_role_fails_handshake() {
    let (source, s) = fake_station(Role::Alice, |r, _| drain(r));
    let (alice, a) = fake_station(Role::Alice, |r, _| drain(r));
    let (bob, b) = fake_station(Role::Bob, |r, _| drain(r));
    let cfg = SessionConfig::new(5, 1, 0, Endpoints { source, alice, bob });
    let fault = referee_session(&cfg, None).unwrap_err();
    assert_eq!(fault.kind, FaultKind::Handshake);
    for h in [s, a, b] {
        h.join().unwrap();
    }
}

#[test]
fn configuration_is_validated() {
    let e = |s: &str, a: &str, b: &str| Endpoints {
        source: s.into(),
        alice: a.into(),
        bob: b.into(),
    };
    let dup = SessionConfig::new(10, 1, 0, e("127.0.0.1:1", "127.0.0.1:1", "127.0.0.1:2"));
    assert_eq!(
        referee_session(&dup, None).unwrap_err().kind,
        FaultKind::Config
    );
    let zero = SessionConfig::new(0, 1, 0, e("a:1", "b:1", "c:1"));
    assert_eq!(
        referee_session(&zero, None).unwrap_err().kind,
        FaultKind::Config
    );
}

#[test]
fn quantum_model_cannot_be_split_into_stations() {
    let err = HvModel::try_from(&ModelSpec::Quantum).unwrap_err();
    assert!(err.to_string().contains("relative angle"));
}
