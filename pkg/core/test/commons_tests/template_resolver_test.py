# =============================================================================
# Copyright (c) 2024 by the lc-intent authors. All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# =============================================================================
import os
import unittest

from lcintent.core.commons.utils import TemplateResolver


class TemplateResolverTest(unittest.TestCase):

    def setUp(self) -> None:
        os.environ["LC_INTENT_TEST"] = "testValue"
        os.environ["LC_INTENT_TEST2"] = "testValue2"

    def test_env_var_resolver_with_strings_expect_success(self):
        resolver = TemplateResolver()

        self.assertEqual("testValue", resolver.resolve("$(env:LC_INTENT_TEST)"))
        self.assertEqual("data/testValue/corpus", resolver.resolve("data/$(env:LC_INTENT_TEST)/corpus"))
        self.assertEqual("testValue-testValue2", resolver.resolve("$(env:LC_INTENT_TEST)-$(env:LC_INTENT_TEST2)"))

    def test_env_var_resolver_with_custom_boundaries_expect_success(self):
        resolver = TemplateResolver("${", "}")

        self.assertEqual("testValue", resolver.resolve("${env:LC_INTENT_TEST}"))
        self.assertEqual("$(env:LC_INTENT_TEST)", resolver.resolve("$(env:LC_INTENT_TEST)"))

    def test_env_var_resolver_with_invalid_templates_expect_empty_or_unchanged(self):
        resolver = TemplateResolver()

        self.assertEqual("", resolver.resolve("$(LC_INTENT_TEST)"))
        self.assertEqual("", resolver.resolve("$(env:)"))
        self.assertEqual("", resolver.resolve("$(env:LC_INTENT_SURELY_NOT_EXISTING)"))
        self.assertEqual("$(env:LC_INTENT_TEST", resolver.resolve("$(env:LC_INTENT_TEST"))
        self.assertEqual("env:LC_INTENT_TEST)", resolver.resolve("env:LC_INTENT_TEST)"))

    def test_env_var_resolver_with_nested_structure_expect_success(self):
        source = {
            "paths": {"out": "$(env:LC_INTENT_TEST)/run", "corpus": "corpus"},
            "windows": [30, "$(env:LC_INTENT_TEST2)"],
            "seed": 7
        }

        resolved = TemplateResolver().resolve(source)

        self.assertEqual("testValue/run", resolved["paths"]["out"])
        self.assertEqual("corpus", resolved["paths"]["corpus"])
        self.assertEqual([30, "testValue2"], resolved["windows"])
        self.assertEqual(7, resolved["seed"])
        self.assertEqual("$(env:LC_INTENT_TEST)/run", source["paths"]["out"])
