// Copyright 2026 The uadet Authors
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


#include <gtest/gtest.h>

#include <string>

#include "uadet/config.hpp"

namespace
{

TEST(Config, DefaultsAreValidAndSynced)
{
  const uadet::Config c = uadet::parse_config("", "empty.cfg");
  EXPECT_EQ(c.raster.x_max, 70.0);
  EXPECT_EQ(c.raster.num_slices, 5u);
  EXPECT_EQ(c.raster.channels(), 6u);
  EXPECT_EQ(c.synth.range.y_min, c.raster.y_min);
  EXPECT_EQ(c.detector.anchor_stride, c.sampling.anchor_stride);
  EXPECT_EQ(c.detector.proposal_nms, 0.8);
  EXPECT_TRUE(c.train.attenuation);
}

TEST(Config, ParsesValuesCommentsAndLists)
{
  const std::string text =
    "# comment line\n"
    "seed = 42   # trailing comment\n"
    "  train.learning_rate=0.002\n"
    "model.frh_hidden = 32, 16\n"
    "loss.likelihood = laplace\n"
    "loss.attenuation = false\n";
  const uadet::Config c = uadet::parse_config(text, "t.cfg");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.train.seed, 42u);
  EXPECT_EQ(c.synth.seed, 42u);
  EXPECT_EQ(c.train.learning_rate, 0.002);
  EXPECT_EQ(c.model.frh_hidden, (std::vector<Eigen::Index>{32, 16}));
  EXPECT_EQ(c.train.likelihood, uadet::Likelihood::Laplace);
  EXPECT_FALSE(c.train.attenuation);
}

TEST(Config, UnknownKeyNamesSourceLine)
{
  try {
    uadet::parse_config("seed = 1\nraster.bogus = 3\n", "t.cfg");
    FAIL();
  } catch (const uadet::ConfigError & e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("t.cfg:2"), std::string::npos);
    EXPECT_NE(what.find("raster.bogus"), std::string::npos);
  }
}

TEST(Config, MalformedValuesRaise)
{
  for (const char * text : {"seed = -1\n", "seed = 1.5\n", "train.learning_rate = fast\n", "loss.attenuation = yes\n",
                            "loss.likelihood = cauchy\n", "model.rpn_hidden = 0\n", "model.rpn_hidden = \n",
                            "no equals sign\n", "train.learning_rate = -1\n", "raster.xy_resolution = 0\n",
                            "assign.rpn_pos = 0.1\n"}) {
    EXPECT_THROW(uadet::parse_config(text, "t.cfg"), uadet::ConfigError) << text;
  }
}

TEST(Config, FormatParseRoundTrip)
{
  uadet::Config c = uadet::parse_config(
    "seed = 9\ntrain.learning_rate = 0.000123456789012345\nmodel.rpn_hidden = 7,5\nsynth.p_base = 0.8\n", "t.cfg");
  const std::string text = uadet::format_config(c);
  const uadet::Config back = uadet::parse_config(text, "round.cfg");
  EXPECT_EQ(uadet::format_config(back), text);
  EXPECT_EQ(back.train.learning_rate, c.train.learning_rate);
  EXPECT_EQ(back.model.rpn_hidden, c.model.rpn_hidden);
}

TEST(Config, LaterLinesOverrideEarlierOnesAndBaseIsKept)
{
  uadet::Config base;
  base.synth.num_cars = 3;
  const uadet::Config c = uadet::parse_config("seed = 1\nseed = 2\n", "t.cfg", base);
  EXPECT_EQ(c.seed, 2u);
  EXPECT_EQ(c.synth.num_cars, 3u);
}

}  // namespace
