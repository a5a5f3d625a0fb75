//! Small hand-checkable corpora used by tests, docs and the CLI smoke tests.

use chrono::NaiveDate;

use crate::dataset::InvestmentEvent;

/// Two well-known investment events with five tags each.
pub const TABLE1_CSV: &str = "\
investor_id,company_id,tags,date
IDG Capital,Tencent,social network|comprehensive social communication|comprehensive financial service|comprehensive game service|SEO/SEM,2000.04.01
Google,Baidu,platform|enterprise service|comprehensive enterprise service|search engines|local comprehensive life,2004.06.01
";

fn event(investor: &str, company: &str, tags: &[&str], day: u32) -> InvestmentEvent {
    let date = NaiveDate::from_ymd_opt(2020, 1, day).unwrap();
    InvestmentEvent::new(investor, company, tags.iter().copied(), date).unwrap()
}

/// Toy-A: three training events and one test event for the new company C1.
///
/// ```text
/// e1: I1 -> C2 {T1, T2}
/// e2: I2 -> C2 {T1, T2}
/// e3: I2 -> C3 {T2}
/// e4: I2 -> C1 {T1, T2}   (test)
/// ```
pub fn toy_a_events() -> Vec<InvestmentEvent> {
    let mut events = toy_a_train();
    events.push(event("I2", "C1", &["T1", "T2"], 4));
    events
}

pub fn toy_a_train() -> Vec<InvestmentEvent> {
    vec![
        event("I1", "C2", &["T1", "T2"], 1),
        event("I2", "C2", &["T1", "T2"], 2),
        event("I2", "C3", &["T2"], 3),
    ]
}
