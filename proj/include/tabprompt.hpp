#pragma once

#include "tabprompt/config.hpp"
#include "tabprompt/csv.hpp"
#include "tabprompt/dataset.hpp"
#include "tabprompt/error.hpp"
#include "tabprompt/eval.hpp"
#include "tabprompt/fewshot.hpp"
#include "tabprompt/importance.hpp"
#include "tabprompt/predict.hpp"
#include "tabprompt/serialize.hpp"
#include "tabprompt/verbalize.hpp"
