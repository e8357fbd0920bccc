/* Copyright 2026 The IMCE Emulator Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Generates replica models, calibration/input tensor sets, hardware
// descriptions and the trained digits classifier.

#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "imce/cli/toolchain.h"
#include "imce/ir/model_io.h"
#include "imce/mapper/hw_info.h"
#include "imce/zoo/models.h"
#include "imce/zoo/trainer.h"

namespace fs = std::filesystem;

int main(int argc, char **argv) {
  CLI::App app{"IMCE model and fixture generator"};
  app.require_subcommand(1);
  uint64_t seed = 1;
  app.add_option("--seed", seed, "generator seed");

  std::string name;
  fs::path out;
  auto *model = app.add_subcommand("model", "replica model with random weights");
  model->add_option("name", name, "model name")
      ->required()
      ->check(CLI::IsMember(imce::model_names()));
  model->add_option("-o,--out", out, "model JSON")->required();

  std::string generator;
  fs::path model_path;
  auto *tensors = app.add_subcommand("tensors", "input or calibration tensor set");
  tensors->add_option("model", model_path, "model JSON (for input shapes)")->required();
  tensors->add_option("-g,--generator", generator, "uniform:N or digits:N")->required();
  tensors->add_option("-o,--out", out, "tensor set JSON")->required();

  int n_an = 4, n_di = 2, fthreads = 4, sthreads = 8;
  auto *hw = app.add_subcommand("hw", "uniform hardware description");
  hw->add_option("--an", n_an, "analog boards");
  hw->add_option("--di", n_di, "digital boards");
  hw->add_option("--fthreads", fthreads, "F-threads per board");
  hw->add_option("--sthreads", sthreads, "S-threads per board");
  hw->add_option("-o,--out", out, "hardware JSON")->required();

  size_t samples = 3000;
  imce::TrainOptions topts;
  auto *train = app.add_subcommand("train-digits", "train the digits classifier");
  train->add_option("--samples", samples, "training set size");
  train->add_option("--epochs", topts.epochs, "training epochs");
  train->add_option("-o,--out", out, "model JSON")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (model->parsed()) {
      imce::save_model(imce::model_by_name(name, seed), out);
    } else if (tensors->parsed()) {
      auto g = imce::load_model(model_path);
      imce::save_tensor_set(imce::make_inputs({}, generator, g.graph_inputs, seed), out);
    } else if (hw->parsed()) {
      imce::save_hw_info(imce::uniform_hw(n_an, n_di, fthreads, sthreads), out);
    } else {
      topts.seed = seed;
      auto train_set = imce::make_digits(samples, seed);
      auto test_set = imce::make_digits(500, seed + 1);
      auto g = imce::train_digits(train_set, topts);
      std::cout << "fp32 test accuracy "
                << 100.0 * imce::fp32_accuracy(g, test_set) << " %\n";
      imce::save_model(g, out);
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return imce::exit_code_for(e);
  }
  return 0;
}
