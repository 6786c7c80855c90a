//! Runs the annotation protocol without a server: training, two viewings
//! of each batch, the reliability gate, and aggregation.
//!
//! cargo run -p iisa --example headless_study

use iisa::study::{NextStep, OpinionSubmission, StudyConfig, StudyStore, TrainingItem};
use iisa::seed::rng_from_seed;
use rand::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let store = StudyStore::new(dir.path());
    let ids: Vec<String> = (0..12).map(|i| format!("img{i:02}")).collect();
    let cfg = StudyConfig { batch_size: 6, min_repetition_gap_ms: 0, ..StudyConfig::default() };
    let grid = cfg.slider();
    let training = vec![TrainingItem {
        item_id: "t1".into(),
        image_id: "img00".into(),
        accepted_iis_range: (0.2, 0.5),
        hint_text: "compare fine texture at full size".into(),
    }];
    let mut study = store.create(&ids, training, cfg, 7, 0)?;
    println!("created {} in {}", study.id(), study.dir().display());

    let mut rng = rng_from_seed(1);
    let truth: Vec<f64> = (0..ids.len()).map(|_| rng.random_range(0.08..0.9)).collect();
    let mut now = 1;
    for (p, careless) in [("alice", false), ("bob", false), ("carol", true)] {
        study.register_participant(p, now)?;
        study.submit_training_opinion(p, "t1", 0.3, None, now)?;
        loop {
            now += 1;
            let view = match study.next_assignment(p, now)? {
                NextStep::Assignment(v) => v,
                _ => break,
            };
            for img in &view.remaining {
                let t = truth[ids.iter().position(|i| i == img).unwrap()];
                let scale = if careless { rng.random_range(0.05..1.0) } else { t * rng.random_range(0.9..1.1) };
                study.submit_opinion(
                    OpinionSubmission {
                        participant_id: p.into(),
                        batch_id: view.batch_id,
                        repetition: view.repetition,
                        image_id: img.clone(),
                        slider_position: grid.position(scale.clamp(0.05, 1.0)),
                        duration_ms: 1500,
                        request_token: None,
                    },
                    now,
                )?;
            }
            if view.repetition == 2 {
                let gate = study.evaluate_reliability_gate(p, view.batch_id, now)?;
                println!("{p} batch {}: srcc {:?} passed {}", view.batch_id, gate.srcc, gate.passed);
                if !gate.passed {
                    break;
                }
            }
        }
    }
    let agg = study.state().aggregate()?;
    for r in &agg.records {
        println!("{} mois {:.3} ci95 {:.3} from {} opinions", r.image_id, r.mois, r.ci95, r.n_opinions);
    }
    study.close()?;
    Ok(())
}
