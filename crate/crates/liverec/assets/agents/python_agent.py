pending_import = None
pending_call = None


def set_import(path):
    global pending_import
    open(path, "rb").close()
    pending_import = path


def set_method(name, args):
    global pending_call
    pending_call = (name, args)

if __name__ == "__main__":
    while True:
        if pending_import is not None:
            path, pending_import = pending_import, None
            try:
                with open(path, "rb") as source:
                    exec(compile(source.read(), path, "exec"))
            except Exception:
                __import__("traceback").print_exc()
        if pending_call is not None:
            (name, args), pending_call = pending_call, None
            try:
                globals()[name](*args)
            except Exception:
                __import__("traceback").print_exc()
