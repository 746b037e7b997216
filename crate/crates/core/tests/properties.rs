use proptest::prelude::*;
use serde_json::{Map, Number, Value};

use liverec_core::probespec::{render_annotation, split_arguments};
use liverec_core::wire::{encode, DapMessage, FrameDecoder};
use liverec_core::{histories, parse_annotation, snapshot_at, StackFrameSnapshot, StackRecording, Variable};

fn json_leaf() -> impl Strategy<Value = Value> {
    prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        any::<i64>().prop_map(|n| Value::Number(n.into())),
        any::<u64>().prop_map(|n| Value::Number(n.into())),
        any::<f64>()
            .prop_filter("finite", |f| f.is_finite())
            .prop_map(|f| Value::Number(Number::from_f64(f).unwrap())),
        ".{0,12}".prop_map(Value::String),
    ]
}

fn json_value() -> impl Strategy<Value = Value> {
    json_leaf().prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(Value::Array),
            prop::collection::btree_map("[a-zA-Z_]{1,6}", inner, 0..4)
                .prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

fn extra_fields() -> impl Strategy<Value = Map<String, Value>> {
    prop::collection::btree_map("x[a-z]{1,5}", json_leaf(), 0..2)
        .prop_map(|m| m.into_iter().collect())
}

fn message() -> impl Strategy<Value = DapMessage> {
    let seq = 1..u64::MAX / 2;
    prop_oneof![
        (seq.clone(), "[a-zA-Z]{1,16}", prop::option::of(json_value()), extra_fields()).prop_map(
            |(seq, command, arguments, extra)| DapMessage::Request {
                seq,
                command,
                arguments,
                extra
            }
        ),
        (
            seq.clone(),
            seq.clone(),
            any::<bool>(),
            "[a-zA-Z]{1,16}",
            prop::option::of(".{0,20}"),
            prop::option::of(json_value()),
            extra_fields()
        )
            .prop_map(|(seq, request_seq, success, command, message, body, extra)| {
                DapMessage::Response {
                    seq,
                    request_seq,
                    success,
                    command,
                    message,
                    body,
                    extra,
                }
            }),
        (seq, "[a-zA-Z]{1,16}", prop::option::of(json_value()), extra_fields()).prop_map(
            |(seq, event, body, extra)| DapMessage::Event {
                seq,
                event,
                body,
                extra
            }
        ),
    ]
}

/// Cuts `bytes` at the given (unsorted, possibly repeated) offsets.
fn chunk(bytes: &[u8], cuts: &[usize]) -> Vec<Vec<u8>> {
    let mut points: Vec<usize> = cuts.iter().map(|c| c % (bytes.len() + 1)).collect();
    points.push(0);
    points.push(bytes.len());
    points.sort_unstable();
    points.dedup();
    points.windows(2).map(|w| bytes[w[0]..w[1]].to_vec()).collect()
}

proptest! {
    #[test]
    fn wire_round_trip_under_random_chunking(
        msgs in prop::collection::vec(message(), 1..8),
        cuts in prop::collection::vec(any::<usize>(), 0..40),
    ) {
        let mut stream = Vec::new();
        for m in &msgs {
            stream.extend(encode(m).unwrap());
        }
        let mut decoder = FrameDecoder::new();
        let mut out = Vec::new();
        for piece in chunk(&stream, &cuts) {
            out.extend(decoder.push(&piece).unwrap());
        }
        prop_assert_eq!(out, msgs);
        prop_assert_eq!(decoder.buffered(), 0);
    }

    #[test]
    fn content_length_matches_body(m in message()) {
        let frame = encode(&m).unwrap();
        let text = String::from_utf8(frame.clone()).unwrap();
        let (header, body) = text.split_once("\r\n\r\n").unwrap();
        let n: usize = header.strip_prefix("Content-Length: ").unwrap().parse().unwrap();
        prop_assert_eq!(n, body.len());
    }
}

/// Argument expression trees rendered to source text.
#[derive(Debug, Clone)]
enum Arg {
    Int(i64),
    Str(String, char),
    List(Vec<Arg>),
    Tuple(Vec<Arg>),
    Braces(Vec<Arg>),
    Call(String, Vec<Arg>),
}

impl Arg {
    fn render(&self) -> String {
        let join = |items: &[Arg]| items.iter().map(Arg::render).collect::<Vec<_>>().join(", ");
        match self {
            Arg::Int(n) => n.to_string(),
            Arg::Str(s, q) => format!("{q}{s}{q}"),
            Arg::List(items) => format!("[{}]", join(items)),
            Arg::Tuple(items) => format!("({})", join(items)),
            Arg::Braces(items) => format!("{{{}}}", join(items)),
            Arg::Call(name, items) => format!("{name}({})", join(items)),
        }
    }
}

fn arg() -> impl Strategy<Value = Arg> {
    let leaf = prop_oneof![
        any::<i64>().prop_map(Arg::Int),
        // Brackets and commas inside literals must not split.
        ("[a-z ,()\\[\\]{}]{0,6}", prop_oneof![Just('\''), Just('"')])
            .prop_map(|(s, q)| Arg::Str(s, q)),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        let items = prop::collection::vec(inner, 0..3);
        prop_oneof![
            items.clone().prop_map(Arg::List),
            items.clone().prop_map(Arg::Tuple),
            items.clone().prop_map(Arg::Braces),
            ("[a-z_][a-z0-9_]{0,4}", items).prop_map(|(n, i)| Arg::Call(n, i)),
        ]
    })
}

/// Independent history computation: walk each variable's observations.
fn oracle_histories(rec: &StackRecording) -> Vec<(String, Vec<(String, u32)>)> {
    let mut names: Vec<String> = Vec::new();
    for s in &rec.snapshots {
        for v in &s.variables {
            if !names.contains(&v.name) {
                names.push(v.name.clone());
            }
        }
    }
    names
        .into_iter()
        .map(|name| {
            let observations: Vec<(String, u32)> = rec
                .snapshots
                .iter()
                .filter_map(|s| s.value_of(&name).map(|v| (v.to_string(), s.line)))
                .collect();
            let mut kept: Vec<(String, u32)> = Vec::new();
            for (i, obs) in observations.iter().enumerate() {
                if i == 0 || observations[i - 1].0 != obs.0 {
                    kept.push(obs.clone());
                }
            }
            (name, kept)
        })
        .collect()
}

fn recording() -> impl Strategy<Value = StackRecording> {
    let var = ("[abc]", "[0-2]").prop_map(|(n, v)| Variable::new(n, v));
    let snap = (1u32..30, prop::collection::vec(var, 0..4)).prop_map(|(line, mut vars)| {
        let mut seen = std::collections::HashSet::new();
        vars.retain(|v| seen.insert(v.name.clone()));
        StackFrameSnapshot {
            line,
            column: 1,
            height: 0,
            variables: vars,
        }
    });
    prop::collection::vec(snap, 0..20).prop_map(|snapshots| StackRecording {
        snapshots,
        ..StackRecording::new()
    })
}

proptest! {
    #[test]
    fn argument_split_matches_rendered_tree(args in prop::collection::vec(arg(), 0..5)) {
        let rendered: Vec<String> = args.iter().map(Arg::render).collect();
        let list = rendered.join(" , ");
        prop_assert_eq!(split_arguments(&list).unwrap(), rendered);
    }

    #[test]
    fn annotation_render_parse_round_trip(
        name in "[a-z_][a-z0-9_]{0,8}",
        args in prop::collection::vec(arg(), 0..4),
        marker in prop_oneof![Just("#"), Just("//")],
        before in prop::collection::vec("[a-z =]{0,10}", 0..3),
    ) {
        let rendered: Vec<String> = args.iter().map(Arg::render).collect();
        let annotation = render_annotation(marker, &name, &rendered);
        let mut source: String = before.iter().map(|l| format!("{l}\n")).collect();
        source.push_str(&annotation);
        let probe = parse_annotation(&source, marker).unwrap().unwrap();
        prop_assert_eq!(&probe.function, &name);
        prop_assert_eq!(&probe.args, &rendered);
        prop_assert_eq!(probe.annotation_span.line, before.len() + 1);
    }

    #[test]
    fn histories_match_oracle(rec in recording()) {
        let got: Vec<(String, Vec<(String, u32)>)> = histories(&rec)
            .iter()
            .map(|h| (h.name.clone(), h.entries.iter().map(|e| (e.value.clone(), e.line)).collect()))
            .collect();
        prop_assert_eq!(got, oracle_histories(&rec));
    }

    #[test]
    fn no_consecutive_duplicates(rec in recording()) {
        for h in histories(&rec).iter() {
            prop_assert!(!h.entries.is_empty());
            for w in h.entries.windows(2) {
                prop_assert_ne!(&w[0].value, &w[1].value);
            }
        }
    }

    #[test]
    fn snapshot_at_in_range(rec in recording(), t in 0usize..25) {
        match snapshot_at(&rec, t) {
            Ok((snap, line)) => {
                prop_assert!(t < rec.len());
                prop_assert_eq!(line, rec.snapshots[t].line);
                prop_assert_eq!(snap, &rec.snapshots[t]);
            }
            Err(e) => {
                prop_assert!(t >= rec.len());
                prop_assert_eq!(e.len, rec.len());
            }
        }
    }
}
