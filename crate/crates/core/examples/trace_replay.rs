//! Saves a run to a trace store, loads it back and re-executes it from the
//! recorded oracle replies and tool results; then shows divergence on an
//! edited trace.

use waypoint::assets;
use waypoint::trace::{replay, RunTrace, TraceStore};

fn main() {
    let config = assets::mock_config();
    let result = waypoint::run(&config, assets::scenario("netball").expect("shipped scenario").question());

    let dir = tempfile::tempdir().expect("temp dir");
    let store = TraceStore::open(dir.path()).expect("open store");
    let path = store.save(&result.trace).expect("save trace");
    println!("saved {} events to {}", result.trace.events.len(), path.display());

    let loaded = RunTrace::load_file(&path).expect("load trace");
    let replayed = replay(&loaded, &config).expect("replay matches");
    assert_eq!(replayed.trace.serialize(), loaded.serialize());
    println!("replay identical; answer {}", replayed.answer.as_deref().unwrap_or("-"));

    let edited = loaded.serialize().replacen("Netball", "Handball", 1);
    let edited = RunTrace::parse(&edited).expect("edited trace parses");
    match replay(&edited, &config) {
        Ok(_) => println!("edited trace replayed unexpectedly"),
        Err(e) => println!("edited trace: {e}"),
    }
}
