#!/usr/bin/env python3
# Copyright 2026 The featlock Authors. All Rights Reserved.
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
# ==============================================================================

"""Reference reading of the VOC fixtures with xml.etree.

One line per file: name|filename|width|height|depth|obj;obj;...
where obj = class,difficult,xmin,ymin,xmax,ymax (repr of float).
"""
import pathlib
import sys
import xml.etree.ElementTree as ET

root = pathlib.Path(sys.argv[1])
for path in sorted(root.glob("*.xml")):
    a = ET.parse(path).getroot()
    size = a.find("size")
    objs = []
    for o in a.findall("object"):
        d = o.find("difficult")
        bb = o.find("bndbox")
        coords = [repr(float(bb.find(k).text.strip())) for k in ("xmin", "ymin", "xmax", "ymax")]
        objs.append(",".join([o.find("name").text, str(int(d.text) if d is not None else 0)] + coords))
    print("|".join([path.stem, a.find("filename").text, size.find("width").text, size.find("height").text,
                    size.find("depth").text, ";".join(objs)]))
