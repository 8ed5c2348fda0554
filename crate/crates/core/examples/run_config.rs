//! Parse a run config, run the decision it describes and emit the result
//! bundle in each output format.

use dosefind::api::decision_payload;
use dosefind::config::RunConfig;
use dosefind::report::{Format, Metadata, Payload, ResultBundle};

const CONFIG: &str = r#"
step = "escalate-decide"

[escalation]
target_dlt_rate = 0.30
provisional_doses = [100, 200, 400, 800, 1600]

[decide.history]
current_dose_index = 0
outcomes = [
  { dose = 100, treated = 3, dlt_count = 0 },
  { dose = 200 },
  { dose = 400 },
  { dose = 800 },
  { dose = 1600 },
]
"#;

fn main() -> dosefind::Result<()> {
    let config = RunConfig::parse(CONFIG)?;
    let esc = config.escalation.clone().expect("validated configs carry an [escalation] table");
    let history = &config.decide.as_ref().expect("validated configs carry a history").history;
    let payload = decision_payload(&esc, history)?;
    let bundle = ResultBundle::new(Metadata::new(config.digest(), None), Payload::Decision(payload));
    for format in [Format::Table, Format::Csv, Format::Json] {
        println!("--- {format:?}");
        print!("{}", bundle.emit(format));
    }
    Ok(())
}
