# Keep-alive host: probed code is loaded and called via set_import/set_method.
method_name = None
method_args = None
import_file = None
load_error = None

def set_import(path):
    global import_file, load_error
    import_file, load_error = path, None

def set_method(name, args):
    global method_name, method_args
    method_name, method_args = name, args

if __name__ == "__main__":
    while True:
        if import_file is not None:
            try:
                with open(import_file, "rb") as fh:
                    code = compile(fh.read(), import_file, "exec")
                exec(code)
            except Exception as exc:
                load_error = f"{type(exc).__name__}: {exc}"
            import_file = None
        if method_name is not None and method_args is not None:
            try:
                result = eval(method_name)(*method_args)
            except Exception:
                result = None
            method_name = None
            method_args = None
# Layout constraint: `while True:` must stay on line 16 — the session plants its
# runner breakpoint there so the host stops once per loop iteration. Loading a
# broken file must not kill the loop: the failure is parked in `load_error` for
# the session to read back.
