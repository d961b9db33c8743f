// Copyright 2026 The qsettle Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "qsettle/ansatz.hpp"
#include "qsettle/circuit.hpp"
#include "qsettle/encoding.hpp"
#include "qsettle/estimator.hpp"
#include "qsettle/gfree.hpp"
#include "qsettle/hermitian.hpp"
#include "qsettle/matrix.hpp"
#include "qsettle/optimize.hpp"
#include "qsettle/oracle.hpp"
#include "qsettle/parallel.hpp"
#include "qsettle/problem.hpp"
#include "qsettle/problem_io.hpp"
#include "qsettle/rng.hpp"
#include "qsettle/run_record.hpp"
#include "qsettle/simulator.hpp"
#include "qsettle/stats.hpp"
