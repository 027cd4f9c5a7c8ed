// SPDX-License-Identifier: Apache-2.0

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let env: Vec<(String, String)> = std::env::vars().collect();
    std::process::exit(vcm::report::cli::run(std::env::args_os(), &env));
}
