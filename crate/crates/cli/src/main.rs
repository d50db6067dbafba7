// Copyright 2026 The weakbell Authors
// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(weakbell_cli::run(std::env::args_os()));
}
