use musicmarket_cli::{execute, parse_cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match parse_cli(std::env::args_os()) {
        Ok(invocation) => execute(invocation),
        Err(f) => {
            if f.code == 0 {
                print!("{}", f.message);
            } else {
                eprint!("{}", f.message);
                if !f.message.ends_with('\n') {
                    eprintln!();
                }
            }
            f.code
        }
    };
    std::process::exit(code);
}
