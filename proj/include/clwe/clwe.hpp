#pragma once

#include "clwe/ablation.hpp"
#include "clwe/bli.hpp"
#include "clwe/config.hpp"
#include "clwe/dictionary.hpp"
#include "clwe/eigsim.hpp"
#include "clwe/embedding_space.hpp"
#include "clwe/error.hpp"
#include "clwe/io.hpp"
#include "clwe/mapper.hpp"
#include "clwe/pipeline.hpp"
#include "clwe/random.hpp"
#include "clwe/report.hpp"
#include "clwe/synth.hpp"
#include "clwe/trainer.hpp"
#include "clwe/vocabulary.hpp"
