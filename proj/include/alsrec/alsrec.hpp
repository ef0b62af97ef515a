#pragma once

#include "alsrec/dataset.hpp"
#include "alsrec/dataset_io.hpp"
#include "alsrec/evaluation.hpp"
#include "alsrec/factorization.hpp"
#include "alsrec/linalg.hpp"
#include "alsrec/model_io.hpp"
#include "alsrec/recommend.hpp"
#include "alsrec/synth.hpp"
