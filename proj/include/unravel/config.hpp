#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unravel/core.hpp"
#include "unravel/models.hpp"
#include "unravel/oracle.hpp"
#include "unravel/sim.hpp"

namespace unravel {

struct ModelSpec {
  std::string name;  // decay2d | cavity_qed | custom
  DecayParams decay;
  CavityParams cavity;
  CMatrix hamiltonian;               // custom
  std::vector<CMatrix> lindblad_ops;  // custom
};

struct SchemeSpec {
  std::string name;       // lqsd rqsd cqsd do_qsd multi_do_qsd qjp do_qjp
  double rate_cap = 0.0;  // do_qjp only
};

struct ObservableSpec {
  std::string name;   // sigma_x sigma_y sigma_z number custom
  std::string label;  // defaults to name
  CMatrix matrix;     // custom only
};

struct InitialStateSpec {
  std::string name;  // zero | one | plus | plus_vacuum | amplitudes
  StateVector amplitudes;
};

struct ExperimentConfig {
  ModelSpec model;
  std::vector<SchemeSpec> schemes;
  std::vector<ObservableSpec> observables;
  InitialStateSpec initial_state;
  double dt = 0.0;
  double t_final = 0.0;
  int n_samples = 1;
  int n_repeats = 1;
  uint64_t seed = 1;
  std::string output_dir = "out";
};

// JSON document with a versioned `schema: 1` field; matrices are nested rows
// of [re, im] pairs
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

LindbladModel build_model(const ModelSpec& spec);

// sigma_* observables act on the atom and `number` on the field when the
// model is a composite cavity; labels must be unique
std::vector<Observable> build_observables(const ExperimentConfig& cfg,
                                          const LindbladModel& model);

StateVector build_initial_state(const ExperimentConfig& cfg,
                                const LindbladModel& model);

// grid over [0, t_final]; t_final must be an integer multiple of dt
TimeGrid build_grid(const ExperimentConfig& cfg);

}  // namespace unravel
