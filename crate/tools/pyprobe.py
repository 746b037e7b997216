"""Run Python scenario steps outside any debugger.

    pyprobe.py oracle SCENARIO    one JSON line per step: status, return, lines
    pyprobe.py mock SCENARIO      the same scenario as mock programs (TOML)

The mock form replays each traced execution: one statement per line event,
`set` holding the locals that change before the next event.
"""

import ast
import json
import sys

import tomli

MARKER = "#@"
EVENT_CAP = 10_000


def annotation(source):
    for line in source.splitlines():
        text = line.strip()
        if text.startswith(MARKER):
            call = ast.parse(text[len(MARKER):], mode="eval").body
            inner = text[len(MARKER):]
            args = [ast.get_source_segment(inner, a) for a in call.args]
            return call.func.id, args
    raise SystemExit("no annotation")


def code_of(source):
    return "\n".join("" if l.strip().startswith(MARKER) else l for l in source.splitlines())


def trace(source):
    name, arg_texts = annotation(source)
    namespace = {}
    exec(compile(source, "<step>", "exec"), namespace)
    function = namespace[name]
    events = []
    seen = {}
    outcome = {}

    class Stop(Exception):
        pass

    def local(frame, event, arg):
        state = [(k, repr(v)) for k, v in frame.f_locals.items()]
        if event == "line":
            key = (frame.f_lineno, tuple(state))
            if key in seen:
                outcome["goto"] = seen[key]
                raise Stop
            seen[key] = len(events)
            events.append((frame.f_lineno, state))
            if len(events) >= EVENT_CAP:
                raise Stop
        elif event == "return":
            outcome["return"] = (repr(arg), state)
        return local

    def top(frame, event, arg):
        return local if frame.f_code is function.__code__ else None

    sys.settrace(top)
    try:
        function(*[eval(a, namespace) for a in arg_texts])
    except Stop:
        pass
    finally:
        sys.settrace(None)
    return name, arg_texts, events, outcome


def diff(before, after):
    old = dict(before)
    return [(k, v) for k, v in after if old.get(k) != v]


def mock_steps(events, outcome):
    steps = []
    for i, (line, state) in enumerate(events):
        step = {"line": line}
        if i + 1 < len(events):
            changes = diff(state, events[i + 1][1])
        elif "goto" in outcome:
            changes = diff(state, events[outcome["goto"]][1])
            step["goto"] = outcome["goto"]
        elif "return" in outcome:
            changes = diff(state, outcome["return"][1])
            step["return"] = outcome["return"][0]
        else:
            changes = []
        step["set"] = changes
        steps.append(step)
    return steps


def toml_str(s):
    return json.dumps(s, ensure_ascii=False)


def render_function(name, params, args, steps):
    out = ["[[function]]", f"name = {toml_str(name)}"]
    out.append("params = [" + ", ".join(toml_str(p) for p in params) + "]")
    out.append("args = [" + ", ".join(toml_str(a) for a in args) + "]")
    out.append("steps = [")
    for s in steps:
        fields = [f"line = {s['line']}"]
        if s["set"]:
            fields.append("set = { " + ", ".join(f"{k} = {toml_str(v)}" for k, v in s["set"]) + " }")
        if "return" in s:
            fields.append(f"return = {toml_str(s['return'])}")
        if "goto" in s:
            fields.append(f"goto = {s['goto']}")
        out.append("  { " + ", ".join(fields) + " },")
    out.append("]")
    return "\n".join(out)


def params_of(source, name):
    for node in ast.walk(ast.parse(source)):
        if isinstance(node, ast.FunctionDef) and node.name == name:
            return [a.arg for a in node.args.args]
    return []


def oracle(scenario):
    for i, step in enumerate(scenario["step"], 1):
        _, _, events, outcome = trace(step["source"])
        done = "return" in outcome
        print(json.dumps({
            "step": i,
            "status": "completed" if done else "interrupted",
            "return": outcome["return"][0] if done else None,
            "lines": [line for line, _ in events],
        }))


def mock(scenario):
    steps = scenario["step"]
    versions = {}
    for step in steps:
        versions.setdefault(code_of(step["source"]), []).append(step["source"])
    programs = {}
    for code, sources in versions.items():
        functions = []
        done = set()
        for source in sources:
            name, args, events, outcome = trace(source)
            if tuple(args) in done:
                continue
            done.add(tuple(args))
            functions.append(render_function(name, params_of(source, name), args, mock_steps(events, outcome)))
        programs[code] = "\n\n".join(functions)
    print(f"name = {toml_str(scenario['name'])}")
    print('language = "mock"')
    for step in steps:
        source = step["source"]
        name, args = annotation(source)
        body = f"#@{name}({', '.join(args)})\n" + programs[code_of(source)] + "\n"
        assert "'''" not in body
        print()
        print("[[step]]")
        print(f"kind = {toml_str(step['kind'])}")
        print(f"note = {toml_str(step['note'])}")
        print("source = '''\n" + body + "'''")


def main():
    if len(sys.argv) != 3 or sys.argv[1] not in ("oracle", "mock"):
        raise SystemExit(__doc__)
    with open(sys.argv[2], "rb") as f:
        scenario = tomli.load(f)
    {"oracle": oracle, "mock": mock}[sys.argv[1]](scenario)


if __name__ == "__main__":
    main()
