#pragma once

#include "asterisk/adam.hpp"
#include "asterisk/checkpoint.hpp"
#include "asterisk/classifier.hpp"
#include "asterisk/config.hpp"
#include "asterisk/dataset.hpp"
#include "asterisk/distill.hpp"
#include "asterisk/errors.hpp"
#include "asterisk/eval.hpp"
#include "asterisk/grad_check.hpp"
#include "asterisk/grad_suite.hpp"
#include "asterisk/model.hpp"
#include "asterisk/ops.hpp"
#include "asterisk/rng.hpp"
#include "asterisk/teacher.hpp"
#include "asterisk/tensor.hpp"
#include "asterisk/tokenizer.hpp"
