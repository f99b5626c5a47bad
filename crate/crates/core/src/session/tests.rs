use super::*;
use crate::pipeline::{AnswerKey, BANK_SCHEMA};
use crate::policy::PolicyMode;

fn record(i: usize, d: Difficulty) -> QuestionRecord {
    QuestionRecord {
        q: format!("What is concept {i}?"),
        a: AnswerKey {
            options: vec![format!("answer {i}"), format!("other {i}"), format!("third {i}")],
            correct_index: i % 3,
        },
        d,
        t: i as f64,
        c: String::new(),
    }
}

fn bank(easy: usize, medium: usize, hard: usize) -> BankFile {
    let mut questions = Vec::new();
    for (d, n) in [(Difficulty::Easy, easy), (Difficulty::Medium, medium), (Difficulty::Hard, hard)] {
        for _ in 0..n {
            questions.push(record(questions.len(), d));
        }
    }
    BankFile {
        schema: BANK_SCHEMA.into(),
        source_id: "test".into(),
        questions,
    }
}

fn session(planned: u32, seed: u64) -> Session {
    Session::create("s1", SessionConfig::new("b", "learner", planned, seed), bank(10, 10, 10), 0).unwrap()
}

fn serve(s: &mut Session) -> ServedQuestion {
    match s.next_question(0).unwrap() {
        NextQuestion::Served(q) => *q,
        NextQuestion::Ended(r) => panic!("ended early: {r:?}"),
    }
}

/// Plays `n` questions, answering correctly when `pattern(i)` holds.
fn play(s: &mut Session, n: usize, pattern: impl Fn(usize) -> bool) {
    for i in 0..n {
        let q = serve(s);
        let key = q.record.a.correct_index;
        let choice = if pattern(i) { key } else { (key + 1) % 3 };
        s.submit_answer(q.question_id, choice, 5.0 + i as f64 % 7.0, 0).unwrap();
    }
}

#[test]
fn replay_reproduces_live_state() {
    let mut s = session(12, 7);
    play(&mut s, 12, |i| i % 4 != 3);
    assert!(matches!(s.next_question(0).unwrap(), NextQuestion::Ended(EndReason::Completed)));
    let text = to_jsonl(&s.events);
    let replayed = replay(&parse_jsonl(&text).unwrap()).unwrap();
    assert_eq!(replayed, s);
    assert_eq!(replayed.snapshot(), s.snapshot());
}

#[test]
fn every_prefix_replays() {
    let mut s = session(6, 3);
    play(&mut s, 6, |i| i % 2 == 0);
    for n in 1..=s.events.len() {
        let r = replay(&s.events[..n]).unwrap();
        assert_eq!(r.events.len(), n);
    }
}

#[test]
fn seq_gap_is_corruption() {
    let mut s = session(4, 1);
    play(&mut s, 2, |_| true);
    let mut events = s.events.clone();
    events.remove(2);
    match replay(&events) {
        Err(SessionError::Corruption { seq, .. }) => assert_eq!(seq, events[2].seq),
        other => panic!("expected corruption, got {other:?}"),
    }
}

#[test]
fn tampered_reward_is_corruption() {
    let mut s = session(3, 1);
    play(&mut s, 1, |_| true);
    let mut events = s.events.clone();
    for e in &mut events {
        if let EventBody::AnswerSubmitted { reward, .. } = &mut e.body {
            reward.total += 0.5;
        }
    }
    assert!(matches!(replay(&events), Err(SessionError::Corruption { .. })));
}

#[test]
fn double_submit_conflicts() {
    let mut s = session(3, 1);
    let q = serve(&mut s);
    s.submit_answer(q.question_id, 0, 3.0, 0).unwrap();
    let before = s.clone();
    assert!(matches!(s.submit_answer(q.question_id, 0, 3.0, 0), Err(SessionError::Conflict(_))));
    assert_eq!(s, before);
}

#[test]
fn serve_while_pending_is_protocol_error() {
    let mut s = session(3, 1);
    serve(&mut s);
    assert!(matches!(s.next_question(0), Err(SessionError::Protocol(_))));
}

#[test]
fn bad_requests_are_rejected() {
    let b = bank(1, 1, 1);
    let zero = SessionConfig::new("b", "l", 0, 0);
    assert!(matches!(Session::create("x", zero, b.clone(), 0), Err(SessionError::Validation(_))));
    let too_many = SessionConfig::new("b", "l", 4, 0);
    assert!(matches!(Session::create("x", too_many, b.clone(), 0), Err(SessionError::Validation(_))));
    let mut s = Session::create("x", SessionConfig::new("b", "l", 2, 0), b, 0).unwrap();
    let q = serve(&mut s);
    assert!(matches!(s.submit_answer(q.question_id, 9, 1.0, 0), Err(SessionError::Validation(_))));
    assert!(matches!(s.submit_answer(q.question_id, 0, f64::NAN, 0), Err(SessionError::Validation(_))));
}

#[test]
fn response_time_is_clamped() {
    let mut s = session(2, 1);
    let q = serve(&mut s);
    s.submit_answer(q.question_id, 0, 1e9, 0).unwrap();
    let Some(EventBody::AnswerSubmitted { response_time, .. }) = s.events.last().map(|e| &e.body) else {
        panic!("last event should be an answer");
    };
    assert_eq!(*response_time, 300.0);
}

#[test]
fn missing_level_falls_back_to_nearest_easier_first() {
    let mut config = SessionConfig::new("b", "l", 2, 0);
    config.policy.mode = PolicyMode::Fixed(Difficulty::Hard);
    let mut s = Session::create("x", config, bank(2, 2, 0), 0).unwrap();
    let q = serve(&mut s);
    assert_eq!(q.trace.sampled, Difficulty::Hard);
    assert_eq!(q.difficulty, Difficulty::Medium);
    assert!(q.fallback);
    assert_eq!(replay(&s.events).unwrap(), s);
}

#[test]
fn ended_session_rejects_further_calls() {
    let mut s = Session::create("x", SessionConfig::new("b", "l", 1, 0), bank(1, 0, 0), 0).unwrap();
    play(&mut s, 1, |_| true);
    assert!(matches!(s.next_question(0).unwrap(), NextQuestion::Ended(EndReason::Completed)));
    assert!(matches!(s.next_question(0), Err(SessionError::Ended)));
}

#[test]
fn level_changes_are_logged_before_the_serve() {
    let mut s = session(20, 5);
    play(&mut s, 20, |_| true);
    let mut saw_change = false;
    for pair in s.events.windows(2) {
        if let EventBody::LevelChanged { to, .. } = pair[0].body {
            saw_change = true;
            let EventBody::QuestionServed { trace, .. } = &pair[1].body else {
                panic!("level_changed must be followed by question_served");
            };
            assert_eq!(trace.sampled, to);
        }
    }
    assert!(saw_change, "an all-correct learner should leave Easy");
}

#[test]
fn end_request_stops_the_session() {
    let mut s = session(5, 0);
    serve(&mut s);
    s.end(0).unwrap();
    assert!(s.is_ended());
    assert!(s.pending_question.is_none());
    assert_eq!(replay(&s.events).unwrap(), s);
}

#[test]
fn earliest_timestamp_is_served_first() {
    let mut b = bank(3, 0, 0);
    b.questions[0].t = 20.0;
    b.questions[1].t = 20.0;
    b.questions[2].t = 50.0;
    let mut s = Session::create("x", SessionConfig::new("b", "l", 3, 0), b, 0).unwrap();
    let mut order = Vec::new();
    for _ in 0..3 {
        let q = serve(&mut s);
        order.push(q.question_id.0);
        s.submit_answer(q.question_id, 0, 1.0, 0).unwrap();
    }
    assert_eq!(order, vec![0, 1, 2]);
}
