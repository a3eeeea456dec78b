# Configuration file for the Sphinx documentation builder.
#
# For a full list of options see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Path setup --------------------------------------------------------------

import os
import sys
sys.path.insert(0, os.path.abspath('../..'))


# -- Project information -----------------------------------------------------

project = 'streamforge'
copyright = '2026, the streamforge developers'
author = 'the streamforge developers'
version = '0.1.0'


# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.coverage',
    'sphinx.ext.napoleon',
    'sphinx.ext.imgmath',
    'sphinx.ext.intersphinx',
    'recommonmark',
    "sphinx_rtd_theme",
]

imgmath_image_format = 'svg'
add_function_parentheses = False

source_suffix = {
    '.rst': 'restructuredtext',
    '.md': 'markdown',
}

# External sphinx doc referenced inside
intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/', None),
    'sklearn': ('https://scikit-learn.org/stable/', None),
    'pandas': ('https://pandas.pydata.org/docs/', None),
    'simpy': ('https://simpy.readthedocs.io/en/latest/', None),
}

templates_path = ['_templates']
exclude_patterns = []

master_doc = "index"
master_toc = "index"

# -- Options for HTML output -------------------------------------------------

import sphinx_rtd_theme

html_theme = "sphinx_rtd_theme"
html_static_path = ['_static']
