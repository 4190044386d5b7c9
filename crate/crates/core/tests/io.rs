mod common;

use common::*;
use extendicap::channels::builtin_channel;
use extendicap::coding::Code;
use extendicap::extendibility::bell_noise_povm;
use extendicap::io::*;

fn temp_path(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("extendicap-io-{}-{name}", std::process::id()))
}

#[test]
fn channel_round_trip_is_bit_identical() {
    for name in ["example29", "depolarizing:3:0.37", "replacer:2"] {
        let ch = builtin_channel(name).unwrap();
        let text = serde_json::to_string(&channel_to_json(&ch)).unwrap();
        let back = channel_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.choi().matrix(), ch.choi().matrix());
        let path = temp_path(&format!("{}.json", name.replace(':', "_")));
        std::fs::write(&path, &text).unwrap();
        let loaded = load_channel(path.to_str().unwrap()).unwrap();
        assert_eq!(loaded.choi().matrix(), ch.choi().matrix());
        std::fs::remove_file(path).unwrap();
    }
    assert!(load_channel("no/such/file.json").is_err());
}

#[test]
fn povm_round_trip_is_bit_identical() {
    let mut r = rng(21);
    let (p, _) = bell_noise_povm(2).unwrap();
    for povm in [p, random_povm(&mut r, "B", 3, 4)] {
        let text = serde_json::to_string_pretty(&povm_to_json(&povm)).unwrap();
        let back = povm_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, povm);
    }
}

#[test]
fn code_round_trip_is_bit_identical() {
    let mut r = rng(22);
    let states = (0..3).map(|_| op("A", random_state(&mut r, 3, 2))).collect();
    let code = Code::new(states, random_povm(&mut r, "B", 3, 3)).unwrap();
    let text = serde_json::to_string(&code_to_json(&code)).unwrap();
    let path = temp_path("code.json");
    std::fs::write(&path, &text).unwrap();
    let back = load_code(path.to_str().unwrap()).unwrap();
    std::fs::remove_file(path).unwrap();
    assert_eq!(back, code);
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(matrix_from_json(&vec![vec![[1.0, 0.0]], vec![]]).is_err());
    let mut j = channel_to_json(&builtin_channel("identity:2").unwrap());
    j.choi[0][0][0] = 3.0;
    assert!(channel_from_json(&j).is_err());
    assert!(serde_json::from_str::<ChannelJson>("{\"dim_in\": 2}").is_err());
}
