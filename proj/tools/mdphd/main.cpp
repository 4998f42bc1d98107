// Copyright 2026 The mdphd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>

#include <CLI11.hpp>

#include "common.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mdphd: hybrid time / time-frequency speech enhancement"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  int exit_code = mdphd::cli::kOk;
  mdphd::cli::add_mix(app, exit_code);
  mdphd::cli::add_train(app, exit_code);
  mdphd::cli::add_enhance(app, exit_code);
  mdphd::cli::add_eval(app, exit_code);
  mdphd::cli::add_gradcheck(app, exit_code);
  mdphd::cli::add_describe(app, exit_code);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return mdphd::cli::kContractError;
  }
  return exit_code;
}
