mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use liverec::backend::{Backend, LoadError};
use liverec::session::Session;
use liverec_core::recorder::{detect_return, CallerMode, ReturnRule};
use liverec_core::Variable;

fn have_gcc() -> bool {
    Command::new("gcc").arg("--version").output().is_ok_and(|o| o.status.success())
}

const C_BINARY_SEARCH: &str = "\
int binary_search(char arr[], int length, char target) {
    int left = 0;
    int right = length - 1;

    while(left <= right){
        int mid = (left + right) / 2;
        char value = arr[mid];

        if(value < target) {
            left = mid + 1;
        } else if(value > target) {
            right = mid - 1;
        } else {
            return mid;
        }
    }
    return -1;
}
";

#[test]
fn builtin_backend_rows() {
    // (id, compiled, caller, load expression prefix)
    let rows = [
        ("python", false, CallerMode::Debuggee, "set_import('"),
        ("c", true, CallerMode::Debugger, "set_import(\""),
        ("mock", false, CallerMode::Debuggee, "load('"),
    ];
    for (id, compiled, caller, load) in rows {
        let b = Backend::builtin(id).unwrap();
        assert_eq!(b.has_compile(), compiled, "{id}");
        assert_eq!(b.caller(), caller, "{id}");
        assert!(b.load_template().starts_with(load), "{id}");
    }
}

#[test]
fn invocation_text_per_caller_mode() {
    let args = vec!["3".to_string()];
    let py = Backend::builtin("python").unwrap().profile();
    assert_eq!(py.invoke_expression("foo", &args), "set_method('foo',[3])");
    assert_eq!(py.invoke_expression("f", &[]), "set_method('f',[])");
    let c = Backend::builtin("c").unwrap().profile();
    let array_args: Vec<String> = ["{1,2,3,4,5,6}", "6", "9"].iter().map(|s| s.to_string()).collect();
    assert_eq!(c.invoke_expression("binary_search", &array_args), "binary_search({1,2,3,4,5,6},6,9)");
}

#[test]
fn return_rules() {
    let py = Backend::builtin("python").unwrap().profile().return_rule;
    let vars = vec![Variable::new("n", "3"), Variable::new("(return) foo", "3")];
    assert_eq!(detect_return(&py, "foo", &vars).as_deref(), Some("3"));
    assert_eq!(detect_return(&py, "foo", &vars[..1]), None);
    let mock = Backend::builtin("mock").unwrap().profile().return_rule;
    assert_eq!(detect_return(&mock, "foo", &[Variable::new("__return__", "3")]).as_deref(), Some("3"));
    let c = Backend::builtin("c").unwrap().profile().return_rule;
    assert_eq!(c, ReturnRule::Evaluate { expression: "$".into() });
    let resets: Vec<u32> = ["python", "mock", "c"]
        .iter()
        .map(|id| Backend::builtin(id).unwrap().profile().reset_cycles)
        .collect();
    assert_eq!(resets, [2, 1, 0]);
}

#[test]
fn interpreted_compile_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("x.py");
    fs::write(&src, "def f():\n    return 1\n").unwrap();
    let b = Backend::builtin("python").unwrap();
    assert_eq!(b.compile(&src).unwrap(), src);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn prepare_writes_agent_into_workdir() {
    let dir = tempfile::tempdir().unwrap();
    let env = common::env_in(dir.path());
    let b = Backend::builtin("python").unwrap();
    let config = b.prepare(&env).unwrap();
    assert_eq!(fs::read_to_string(&config.runner_path).unwrap(), b.agent_source().unwrap());
    assert_eq!(config.runner_line, 16);
    assert_eq!(config.launch_args["program"], config.runner_path.to_string_lossy().as_ref());
    assert_eq!(config.launch_args["justMyCode"], false);
    assert_eq!(config.launch_args["showReturnValue"], true);
    assert_eq!(config.launch_args["stopOnEntry"], false);
    assert_eq!(config.adapter_command[1..], ["-m", "debugpy.adapter"]);
}

#[test]
fn custom_manifest_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let text = include_str!("../assets/backends/mock.toml").replace("id = \"mock\"", "id = \"mock2\"");
    let path = dir.path().join("mock2.toml");
    fs::write(&path, text).unwrap();
    let b = Backend::resolve(path.to_str().unwrap()).unwrap();
    assert_eq!(b.id(), "mock2");
    assert!(Backend::resolve("cobol").is_err());
}

#[test]
fn mock_load_of_unreadable_path_fails() {
    let dir = tempfile::tempdir().unwrap();
    let b = Backend::builtin("mock").unwrap();
    let mut s = Session::launch_with(b.prepare(&common::env_in(dir.path())).unwrap()).unwrap();
    let err = b.load_code(&mut s, &dir.path().join("missing.toml")).unwrap_err();
    assert!(matches!(err, LoadError::Rejected { .. }), "{err}");
    b.load_code(&mut s, &common::fixture("foo.toml")).unwrap();
}

/// Builds a host program that loads `lib` and prints what `binary_search`
/// answers for "abcdef" and `target`.
fn run_standalone(dir: &Path, lib: &Path, target: char) -> String {
    let host = dir.join("host.c");
    fs::write(
        &host,
        "#include <dlfcn.h>\n#include <stdio.h>\n\
         int main(int argc, char **argv) {\n\
           void *h = dlopen(argv[1], RTLD_NOW);\n\
           if (!h) { puts(dlerror()); return 1; }\n\
           int (*f)(char *, int, char) = (int (*)(char *, int, char))dlsym(h, \"binary_search\");\n\
           printf(\"%d\\n\", f(\"abcdef\", 6, argv[2][0]));\n\
           return 0;\n\
         }\n",
    )
    .unwrap();
    let exe = dir.join("host");
    let built = Command::new("gcc").arg("-o").arg(&exe).arg(&host).arg("-ldl").status().unwrap();
    assert!(built.success());
    let out = Command::new(&exe).arg(lib).arg(target.to_string()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    String::from_utf8(out.stdout).unwrap().trim().to_string()
}

#[test]
fn c_compile_produces_loadable_library() {
    if !have_gcc() {
        eprintln!("skipped: gcc not installed");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let b = Backend::builtin("c").unwrap();
    let v1 = dir.path().join("v1.c");
    fs::write(&v1, C_BINARY_SEARCH).unwrap();
    let lib1 = b.compile(&v1).unwrap();
    assert_eq!(lib1, dir.path().join("v1.so"));
    assert_eq!(&fs::read(&lib1).unwrap()[..4], b"\x7fELF");
    let v2 = dir.path().join("v2.c");
    fs::write(&v2, C_BINARY_SEARCH.replace("return -1;", "return -2;")).unwrap();
    let lib2 = b.compile(&v2).unwrap();
    assert_eq!(run_standalone(dir.path(), &lib1, 'g'), "-1");
    assert_eq!(run_standalone(dir.path(), &lib2, 'g'), "-2");
    assert_eq!(run_standalone(dir.path(), &lib1, 'd'), "3");
}

#[test]
fn c_compile_error_carries_diagnostics() {
    if !have_gcc() {
        eprintln!("skipped: gcc not installed");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("broken.c");
    fs::write(&src, "int f(void) { return 1 }\n").unwrap();
    let err = Backend::builtin("c").unwrap().compile(&src).unwrap_err();
    assert!(err.diagnostics.contains("error"), "{}", err.diagnostics);
    assert!(err.diagnostics.contains("broken.c"));
}

#[test]
fn c_agent_builds() {
    if !have_gcc() {
        eprintln!("skipped: gcc not installed");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let config = Backend::builtin("c").unwrap().prepare(&common::env_in(dir.path())).unwrap();
    let agent = Path::new(config.launch_args["program"].as_str().unwrap());
    assert!(agent.is_file());
    let source = fs::read_to_string(&config.runner_path).unwrap();
    assert_eq!(source.lines().nth(15).unwrap().trim(), "idle_ticks++;");
}
